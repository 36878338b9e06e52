"""
Neural network solver for multi-frequency elliptic problems.

Two-step method: train on a scaled domain to capture high-frequency content,
scale the network back, then train a residual correction network for the
remaining low-frequency error.

CLI reference: docs/cli.md
"""

import jax

# Every computation in the package is float64; tolerances in the tests rely on it.
jax.config.update("jax_enable_x64", True)

__version__ = "1.0.0"
