"""
Constants for the solver.

Centralized location for experimental-protocol numbers and defaults.
"""

# Optimizer
DEFAULT_LEARNING_RATE = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Initialization
INITIAL_BIAS = 0.01  # every bias starts here; weights are Xavier-normal

# Loss weights
BOUNDARY_WEIGHT = 1.0  # w2

# Training bookkeeping
RESIDUAL_SEED_OFFSET = 1000  # residual network init stream = seed + offset

# Protocol sizes
TEST_GRID_1D = 100_000
TEST_GRID_2D = 1_000_000

# Spectrum diagnostics (regression target frequencies on [-1, 1))
SPECTRUM_POINTS = 1000
ALPHA_LOW_INDEX = 2
ALPHA_HIGH_INDEX = 50

# Numerics
SOFTPLUS_LINEAR_THRESHOLD = 20.0  # softplus(z) evaluated as z + log1p(exp(-z)) above this

# CLI exit codes
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_DIVERGED = 3

# Philox stream ids (per seed)
STREAM_INIT = 0
STREAM_INTERIOR = 1
STREAM_BOUNDARY = 2

# A residual rhs f + lap N below this fraction of ||f|| counts as zero (w1 falls back to 1)
RESIDUAL_RHS_RTOL = 1e-8
