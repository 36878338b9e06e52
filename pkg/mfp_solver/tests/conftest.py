"""
Pytest configuration and fixtures for solver tests.
"""

import math

import pytest
import jax.numpy as jnp

from common.models import ActivationSpec, MlpSpec, ProblemRef, ResidualConfig, TrainConfig
from mfp_solver.config import get_settings
from mfp_solver.problems import POISSON_1D_TERMS, make_poisson_1d, make_poisson_2d, make_regression_target
from mfp_solver.selfcheck import random_net


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False,
        help="Run desk-scale training runs (slow and extended markers)"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="desk-scale run, use --runslow")
    for item in items:
        if "slow" in item.keywords or "extended" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session", autouse=True)
def configure_test_environment():
    """
    Configure test environment settings.

    Disables per-epoch progress lines and ignores any MFP_OUT from the
    environment so artifacts land in tmp_path directories.
    This fixture runs automatically for all tests (autouse=True).
    """
    get_settings.cache_clear()
    settings = get_settings()
    settings.mfp_progress_every = 0
    settings.mfp_out = None
    settings.mfp_jobs = 1
    yield


@pytest.fixture
def small_spec_1d():
    """2 x 8 sin network on 1D inputs."""
    return MlpSpec(input_dim=1, hidden_layers=2, width=8)


@pytest.fixture
def tanh_net():
    """
    4 x 20 tanh network with parameters clipped to [-1, 1].

    Returns:
        tuple: (MlpSpec, flat parameters)
    """
    return random_net("tanh", 1, seed=3, hidden_layers=4, width=20)


@pytest.fixture
def sin_net_2d():
    """2 x 8 sin network on 2D inputs with clipped parameters."""
    return random_net("sin", 2, seed=5)


@pytest.fixture
def poisson1d():
    return make_poisson_1d()


@pytest.fixture
def poisson2d_n5():
    return make_poisson_2d(5)


@pytest.fixture
def regression_target():
    return make_regression_target()


@pytest.fixture
def tiny_poisson_config():
    """
    Seconds-scale 1D Poisson config with a residual stage.

    Returns:
        TrainConfig: 2 x 8 networks, 20 + 10 epochs, 32 interior points
    """
    return TrainConfig(
        problem=ProblemRef(name="poisson1d"),
        spec=MlpSpec(input_dim=1, hidden_layers=2, width=8),
        epochs=20,
        seeds=[0, 1],
        interior_count=32,
        boundary_count=2,
        eval_every=5,
        residual=ResidualConfig(spec=MlpSpec(input_dim=1, hidden_layers=2, width=6), epochs=10),
        test_grid_count=200,
    )


@pytest.fixture
def tiny_regression_config():
    """Seconds-scale regression config, seed 0 on the uniform grid."""
    return TrainConfig(
        problem=ProblemRef(name="regression"),
        spec=MlpSpec(input_dim=1, hidden_layers=2, width=8, activation=ActivationSpec(kind="tanh")),
        epochs=10,
        seeds=[0, 1],
        interior_count=64,
        boundary_count=0,
        uniform_seed=0,
        eval_every=5,
        test_grid_count=300,
    )


@pytest.fixture
def exact_poisson1d_net():
    """
    One-hidden-layer sin network representing the 1D Poisson solution exactly.

    Hidden neuron k computes sin(k pi x); the readout weights are the amplitudes.

    Returns:
        tuple: (MlpSpec, flat parameters)
    """
    spec = MlpSpec(input_dim=1, hidden_layers=1, width=len(POISSON_1D_TERMS))
    weights = [k * math.pi for _, k in POISSON_1D_TERMS]
    amplitudes = [a for a, _ in POISSON_1D_TERMS]
    params = jnp.asarray(weights + [0.0] * len(weights) + amplitudes + [0.0], dtype=jnp.float64)
    return spec, params
