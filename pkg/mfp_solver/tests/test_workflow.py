"""
Tests for the LangGraph seed-run workflow and its nodes.
"""

import jax.numpy as jnp
import numpy as np
import pytest

from common.models import RunFailure, RunSummary
from mfp_solver.config import get_settings
from mfp_solver.network import init_xavier_normal
from mfp_solver.nodes.formatters import config_hash
from mfp_solver.nodes.validators import config_problems, validate_config
from mfp_solver.problems import make_poisson_1d
from mfp_solver.sampling import training_sets
from mfp_solver.selfcheck import zero_output
from mfp_solver.training import error_report, pde_loss
from mfp_solver.workflow import create_workflow, get_workflow, should_run_residual


def _invoke(config, seed=0):
    return get_workflow().invoke({"config": config, "seed": seed, "label": "t", "variant": "v"})


class TestWorkflowIntegration:
    """Integration tests for the complete workflow."""

    def test_poisson_with_residual(self, tiny_poisson_config):
        """Test a successful two-stage run end-to-end."""
        state = _invoke(tiny_poisson_config)
        summary = state["final_response"]

        assert isinstance(summary, RunSummary)
        assert summary.seed == 0
        assert summary.label == "t" and summary.variant == "v"
        assert summary.residual is not None
        assert summary.train.dataset == "train" and summary.test.dataset == "test"
        for report in (summary.train, summary.test):
            assert report.eps_f is not None
            assert report.eps_u_r is not None and report.eps_f_r is not None
        assert summary.config_hash == config_hash(tiny_poisson_config)
        assert state["test_points"].count == 200

    def test_reports_use_best_parameters(self, tiny_poisson_config):
        """Test that first-stage errors are those of the best-loss parameters."""
        state = _invoke(tiny_poisson_config)
        primary = state["primary"]

        expected = error_report(
            state["problem"], (primary.spec, primary.best_params), None,
            state["interior"].points, "train"
        )

        assert state["final_response"].train.eps_u == pytest.approx(expected.eps_u, rel=1e-12)
        assert state["final_response"].train.eps_f == pytest.approx(expected.eps_f, rel=1e-12)

    def test_residual_base_follows_source(self, tiny_poisson_config):
        """Test that the residual equation is formed from the configured first-stage parameters."""
        state = _invoke(tiny_poisson_config)
        np.testing.assert_array_equal(
            np.asarray(state["residual_base"]), np.asarray(state["primary"].final_params)
        )

        best = tiny_poisson_config.model_copy(update={
            "residual": tiny_poisson_config.residual.model_copy(update={"source": "best"})
        })
        state = _invoke(best)
        np.testing.assert_array_equal(
            np.asarray(state["residual_base"]), np.asarray(state["primary"].best_params)
        )

    def test_regression_run(self, tiny_regression_config):
        """Test a regression run: no residual stage and no residual errors."""
        summary = _invoke(tiny_regression_config)["final_response"]

        assert isinstance(summary, RunSummary)
        assert summary.residual is None
        assert summary.test.eps_f is None
        assert summary.train.eps_u_r is None

    def test_training_points_match_seed(self, tiny_poisson_config):
        """Test that the workflow samples the seed's training sets."""
        state = _invoke(tiny_poisson_config, seed=1)
        interior, boundary = training_sets(make_poisson_1d().domain, tiny_poisson_config, 1)

        np.testing.assert_array_equal(state["interior"].points, interior.points)
        np.testing.assert_array_equal(state["boundary"].points, boundary.points)

    def test_invalid_config_dict(self):
        """Test that an unparseable config ends in a CONFIG_ERROR record."""
        state = _invoke({"problem": {"name": "poisson1d"}})
        failure = state["final_response"]

        assert isinstance(failure, RunFailure)
        assert failure.error_code == "CONFIG_ERROR"
        assert "primary" not in state

    def test_sampling_rule_violation(self, tiny_poisson_config):
        """Test that a bad boundary count stops the run before training."""
        config = tiny_poisson_config.model_copy(update={"boundary_count": 3})
        state = _invoke(config)

        assert isinstance(state["final_response"], RunFailure)
        assert state["final_response"].error_code == "CONFIG_ERROR"
        assert "problem" not in state

    def test_divergence(self, tiny_poisson_config, monkeypatch):
        """Test that a diverged first stage ends in a DIVERGED record with details."""
        monkeypatch.setattr(get_settings(), "mfp_divergence_threshold", 1e-30)

        failure = _invoke(tiny_poisson_config)["final_response"]

        assert isinstance(failure, RunFailure)
        assert failure.error_code == "DIVERGED"
        assert failure.details["epoch"] == 0
        assert failure.details["stage"].startswith("primary")

    def test_create_workflow_compiles(self):
        """Test that a fresh graph compiles and the cached one is reused."""
        assert create_workflow() is not None
        assert get_workflow() is get_workflow()


@pytest.fixture
def tiny_poisson2d_config(tiny_poisson_config):
    """Seconds-scale 2D Poisson config on the unit square with a residual stage."""
    return tiny_poisson_config.model_validate({
        **tiny_poisson_config.model_dump(),
        "problem": {"name": "poisson2d", "n": 2},
        "spec": {"input_dim": 2, "hidden_layers": 2, "width": 8},
        "residual": {"spec": {"input_dim": 2, "hidden_layers": 2, "width": 6}, "epochs": 5},
        "epochs": 10,
        "interior_count": 64,
        "boundary_count": 16,
        "test_grid_count": 400,
    })


class TestWorkflow2D:
    """Integration tests for a 2D Poisson run."""

    def test_two_stage_run(self, tiny_poisson2d_config):
        """Test that a 2D run finishes with first-stage and residual errors."""
        state = _invoke(tiny_poisson2d_config, seed=1)
        summary = state["final_response"]

        assert isinstance(summary, RunSummary)
        assert summary.residual is not None
        assert summary.test.eps_u_r is not None
        assert state["interior"].points.shape == (64, 2)
        assert state["test_points"].count == 400

    def test_boundary_covers_all_edges(self, tiny_poisson2d_config):
        """Test that the sampled boundary has count/4 points on each edge of the square."""
        points = _invoke(tiny_poisson2d_config, seed=1)["boundary"].points

        assert points.shape == (16, 2)
        for axis in (0, 1):
            for value in (0.0, 1.0):
                assert int(np.sum(points[:, axis] == value)) >= 4
        on_edge = np.isin(points[:, 0], [0.0, 1.0]) | np.isin(points[:, 1], [0.0, 1.0])
        assert np.all(on_edge)

    def test_boundary_term_follows_edge_values(self, tiny_poisson2d_config):
        """Test that the boundary term is mean (g - N)^2 over the sampled edges."""
        state = _invoke(tiny_poisson2d_config, seed=1)
        problem, boundary = state["problem"], state["boundary"]
        spec = tiny_poisson2d_config.spec
        flat = zero_output(spec, init_xavier_normal(spec, 0))
        shifted = flat.at[-1].set(0.5)

        assert float(pde_loss(spec, flat, problem, state["interior"], boundary, w1=0.0)) == 0.0
        assert float(pde_loss(spec, shifted, problem, state["interior"], boundary, w1=0.0)) == pytest.approx(0.25)
        lifted = problem.model_copy(update={"g": lambda x: jnp.ones(x.shape[0], dtype=jnp.float64)})
        assert float(pde_loss(spec, flat, lifted, state["interior"], boundary, w1=0.0)) == pytest.approx(1.0)


class TestValidators:
    """Tests for configuration validation."""

    def test_valid_config(self, tiny_poisson_config):
        """Test that a valid config passes."""
        result = validate_config({"config": tiny_poisson_config, "seed": 0})

        assert result["validation_errors"] == []
        assert result["config"] is tiny_poisson_config

    def test_dict_config_is_parsed(self, tiny_poisson_config):
        """Test that the dict form of a config is validated into a TrainConfig."""
        result = validate_config({"config": tiny_poisson_config.model_dump(), "seed": 0})

        assert result["config"] == tiny_poisson_config

    def test_2d_rules(self, tiny_poisson_config):
        """Test 2D boundary, test-grid and uniform-grid count rules."""
        config = tiny_poisson_config.model_validate({
            **tiny_poisson_config.model_dump(),
            "problem": {"name": "poisson2d", "n": 2},
            "spec": {"input_dim": 2, "hidden_layers": 2, "width": 8},
            "residual": None,
            "boundary_count": 6,
            "test_grid_count": 1000,
            "interior_count": 50,
            "uniform_seed": 0,
        })

        errors = config_problems(config, 0)

        assert len(errors) == 3
        assert config_problems(config, 1) != errors

    def test_error_codes_align(self, tiny_poisson_config):
        """Test that every error message gets an error code."""
        config = tiny_poisson_config.model_copy(update={"boundary_count": 4})
        result = validate_config({"config": config, "seed": 0})

        assert len(result["error_codes"]) == len(result["validation_errors"]) == 1


class TestRouting:
    """Tests for conditional routing after the first stage."""

    def test_should_run_residual(self, tiny_poisson_config, tiny_regression_config):
        """Test error, residual and evaluate routes."""
        assert should_run_residual({"config": tiny_poisson_config, "validation_errors": ["x"]}) == "error"
        assert should_run_residual({"config": tiny_poisson_config, "validation_errors": []}) == "residual"
        assert should_run_residual({"config": tiny_regression_config}) == "evaluate"
