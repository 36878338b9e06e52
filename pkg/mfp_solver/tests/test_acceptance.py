"""
Desk-scale accuracy checks on the bundled configs.

These train the full desk budgets (minutes to hours) and only run with
--runslow.
"""

import statistics

import pytest

from common.models import RunSummary
from mfp_solver.experiment import load_experiment, run_experiment
from mfp_solver.utils.paths import resolve_from_project_root


def _run_bundled(name, out_dir):
    experiment = load_experiment(resolve_from_project_root(f"configs/{name}"))
    outcome = run_experiment(experiment, out_dir)
    assert outcome.exit_code == 0, [r for r in outcome.records if not isinstance(r, RunSummary)]
    by_variant = {}
    for record in outcome.records:
        by_variant.setdefault(record.variant, []).append(record)
    return by_variant


@pytest.fixture(scope="module")
def regression_runs(tmp_path_factory):
    return _run_bundled("regression_desk.json", tmp_path_factory.mktemp("regression"))


@pytest.fixture(scope="module")
def poisson1d_runs(tmp_path_factory):
    return _run_bundled("poisson1d_desk.json", tmp_path_factory.mktemp("poisson1d"))


@pytest.mark.slow
class TestRegressionDesk:
    """Scaled sin network against tanh on the two-frequency target."""

    def test_scaled_sin_accuracy(self, regression_runs):
        """Test mean test-grid error <= 1e-2 for sin(x) with b = 50 pi."""
        errors = [r.test.eps_u for r in regression_runs["sin(x), b=50pi"]]

        assert statistics.mean(errors) <= 1e-2

    def test_tanh_is_much_worse(self, regression_runs):
        """Test that tanh at the same budget is at least 10x less accurate."""
        scaled = statistics.mean(r.test.eps_u for r in regression_runs["sin(x), b=50pi"])
        tanh = statistics.mean(r.test.eps_u for r in regression_runs["tanh"])

        assert tanh >= 10.0 * scaled


@pytest.mark.slow
class TestPoisson1dDesk:
    """Scaling plus residual correction on the 1D Poisson problem."""

    def test_scaled_stage_fits_rhs(self, poisson1d_runs):
        """Test mean training residual error <= 5e-2 for b = 16 pi."""
        runs = poisson1d_runs["sin(x), b=16pi"]

        assert statistics.mean(r.train.eps_f for r in runs) <= 5e-2

    def test_corrected_solution_accuracy(self, poisson1d_runs):
        """Test mean corrected test error <= 5e-2 for b = 16 pi."""
        runs = poisson1d_runs["sin(x), b=16pi"]

        assert statistics.mean(r.test.eps_u_r for r in runs) <= 5e-2

    def test_correction_improves_every_seed(self, poisson1d_runs):
        """Test that the residual stage lowers the test error on each seed."""
        for run in poisson1d_runs["sin(x), b=16pi"]:
            assert run.test.eps_u_r < run.test.eps_u, f"seed {run.seed}"

    def test_scaling_beats_unscaled(self, poisson1d_runs):
        """Test that b = 16 pi gives a smaller corrected error than b = 1 on at least 2 of 3 seeds."""
        plain = {r.seed: r.test.eps_u_r for r in poisson1d_runs["sin(x)"]}
        scaled = {r.seed: r.test.eps_u_r for r in poisson1d_runs["sin(x), b=16pi"]}

        wins = sum(scaled[seed] < plain[seed] for seed in scaled)
        assert wins >= 2


@pytest.mark.slow
@pytest.mark.extended
class TestPoisson2dDesk:
    """Reduced-sampling 2D run with five frequencies."""

    def test_corrected_solution_accuracy(self, tmp_path):
        """Test corrected test error <= 5e-2 for each seed at b = 32 pi."""
        runs = _run_bundled("poisson2d_n5_desk.json", tmp_path)["sin(x), b=32pi"]

        for run in runs:
            assert run.test.eps_u_r <= 5e-2, f"seed {run.seed}"
