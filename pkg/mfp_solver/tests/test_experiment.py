"""
Tests for the experiment runner: overrides, artifacts, tables and exit codes.
"""

import json

import numpy as np
import pytest

from common.models import ExperimentConfig, RunFailure, RunSummary, Variant
from mfp_solver.checkpoint import load_checkpoint
from mfp_solver.exceptions import ConfigurationError
from mfp_solver.experiment import (
    apply_overrides,
    exit_code_for,
    load_experiment,
    run_experiment,
    run_seed,
    run_stem,
    table_header,
    write_table,
)
from mfp_solver.problems import make_poisson_1d
from mfp_solver.sampling import training_sets
from mfp_solver.utils.formatters import read_csv
from mfp_solver.utils.paths import resolve_from_project_root

BUNDLED_CONFIGS = [
    "regression_table1.json",
    "regression_desk.json",
    "poisson1d_table2.json",
    "poisson1d_desk.json",
    "poisson2d_n5.json",
    "poisson2d_n5_desk.json",
    "poisson2d_n6.json",
]


@pytest.fixture
def tiny_experiment(tiny_poisson_config):
    """Two variants x two seeds of the tiny Poisson config."""
    return ExperimentConfig(
        label="tiny",
        base=tiny_poisson_config,
        variants=[
            Variant(name="sin(x)"),
            Variant(name="sin(x), b=4pi", scale_b="4pi", epochs=10),
        ],
    )


def _failure(code):
    return RunFailure(label="t", variant="v", seed=0, error="boom", error_code=code)


class TestLoadExperiment:
    """Tests for experiment files and overrides."""

    @pytest.mark.parametrize("name", BUNDLED_CONFIGS)
    def test_bundled_configs_validate(self, name):
        """Test that every bundled config loads and its variants apply."""
        experiment = load_experiment(resolve_from_project_root(f"configs/{name}"))

        for variant in experiment.variants:
            config = variant.apply(experiment.base)
            assert config.spec.input_dim == config.problem.dim

    def test_bundled_scaling_factors(self):
        """Test that '50pi' style factors are parsed."""
        experiment = load_experiment(resolve_from_project_root("configs/regression_desk.json"))
        scaled = [v for v in experiment.variants if v.scale_b is not None]

        assert scaled[0].scale_b == pytest.approx(50 * 3.141592653589793)

    def test_relative_path_falls_back_to_project_root(self, tmp_path, monkeypatch):
        """Test that a bundled config loads by relative path from another working directory."""
        monkeypatch.chdir(tmp_path)

        experiment = load_experiment("configs/poisson1d_desk.json")

        assert experiment == load_experiment(resolve_from_project_root("configs/poisson1d_desk.json"))

    def test_working_directory_wins(self, tmp_path, monkeypatch, tiny_experiment):
        """Test that a relative path present in the working directory is read from there."""
        (tmp_path / "configs").mkdir()
        (tmp_path / "configs" / "poisson1d_desk.json").write_text(tiny_experiment.model_dump_json())
        monkeypatch.chdir(tmp_path)

        assert load_experiment("configs/poisson1d_desk.json").label == "tiny"

    def test_missing_file(self, tmp_path):
        """Test that a missing config file is a configuration error."""
        with pytest.raises(ConfigurationError, match="not found"):
            load_experiment(tmp_path / "missing.json")

    def test_invalid_json(self, tmp_path):
        """Test that malformed JSON is a configuration error."""
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="not valid JSON"):
            load_experiment(path)

    def test_empty_variants(self, tmp_path, tiny_poisson_config):
        """Test that an experiment needs at least one variant."""
        path = tmp_path / "empty.json"
        path.write_text(json.dumps({
            "label": "empty", "base": tiny_poisson_config.model_dump(), "variants": []
        }), encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_experiment(path)

    def test_seed_offset_and_epochs_override(self, tiny_experiment):
        """Test that overrides shift seeds and replace every epoch budget."""
        base = tiny_experiment.base.model_copy(update={"uniform_seed": 0})
        experiment = tiny_experiment.model_copy(update={"base": base})

        shifted = apply_overrides(experiment, seed_offset=10, epochs_override=3)

        assert shifted.base.seeds == [10, 11]
        assert shifted.base.uniform_seed == 10
        assert shifted.base.epochs == 3
        assert shifted.base.residual.epochs == 3
        assert shifted.variants[1].epochs == 3
        assert shifted.variants[0].epochs is None

    def test_negative_epochs_override(self, tiny_experiment):
        """Test that a negative epoch override is rejected."""
        with pytest.raises(ConfigurationError):
            apply_overrides(tiny_experiment, epochs_override=-1)


class TestRunExperiment:
    """Tests for run_experiment artifacts and tables."""

    def test_artifacts_and_table(self, tmp_path, tiny_experiment):
        """Test per-run files, checkpoints and the aggregate table."""
        outcome = run_experiment(tiny_experiment, tmp_path, jobs=1)

        assert outcome.exit_code == 0
        assert len(outcome.records) == 4
        assert all(isinstance(r, RunSummary) for r in outcome.records)

        stem = run_stem("tiny", tiny_experiment.variants[1], 1)
        for suffix in (".json", "_history.csv", "_residual_history.csv", "_best.ckpt",
                       "_final.ckpt", "_residual_best.ckpt", "_residual_final.ckpt"):
            assert (tmp_path / f"{stem}{suffix}").is_file()

        header, _ = load_checkpoint(tmp_path / f"{stem}_final.ckpt")
        assert header.epoch == 10
        assert header.scale_b == pytest.approx(4 * 3.141592653589793)
        assert header.problem.name == "poisson1d"
        r_header, _ = load_checkpoint(tmp_path / f"{stem}_residual_final.ckpt")
        assert r_header.role == "residual" and r_header.scale_b == 1.0

        history = read_csv(tmp_path / f"{stem}_history.csv")
        assert list(history[0].keys()) == ["epoch", "loss", "eps_u", "eps_f"]
        assert [row["epoch"] for row in history] == ["0", "5", "10"]

        table = read_csv(outcome.table_path)
        assert outcome.table_path.name == "tiny_table.csv"
        assert list(table[0].keys()) == table_header(with_residual=True)
        assert [row["variant"] for row in table] == ["sin(x)", "sin(x), b=4pi"]
        assert all(row["eps_u_r_std"] != "" for row in table)

    def test_training_point_files(self, tmp_path, tiny_experiment):
        """Test that each run writes the seed's interior and boundary points on the original domain."""
        run_experiment(tiny_experiment, tmp_path, jobs=1)
        stem = run_stem("tiny", tiny_experiment.variants[1], 1)
        interior, boundary = training_sets(make_poisson_1d().domain, tiny_experiment.base, 1)

        rows = read_csv(tmp_path / f"{stem}_interior.csv")
        assert list(rows[0].keys()) == ["x"]
        np.testing.assert_allclose([float(r["x"]) for r in rows], interior.points[:, 0], rtol=1e-12)
        rows = read_csv(tmp_path / f"{stem}_boundary.csv")
        assert [float(r["x"]) for r in rows] == [-1.0, 1.0]
        assert boundary.count == 2

    def test_regression_has_no_boundary_file(self, tmp_path, tiny_regression_config):
        """Test that a regression run writes interior points only."""
        record = run_seed(tiny_regression_config, 0, "reg", Variant(name="tanh"), tmp_path)
        stem = run_stem("reg", Variant(name="tanh"), 0)

        assert isinstance(record, RunSummary)
        assert len(read_csv(tmp_path / f"{stem}_interior.csv")) == tiny_regression_config.interior_count
        assert not (tmp_path / f"{stem}_boundary.csv").exists()

    def test_table_means_match_records(self, tmp_path, tiny_experiment):
        """Test that table means are the means of the per-run records."""
        outcome = run_experiment(tiny_experiment, tmp_path)
        table = read_csv(outcome.table_path)
        runs = [r for r in outcome.records if r.variant == "sin(x)"]

        assert float(table[0]["eps_u_mean"]) == pytest.approx(sum(r.test.eps_u for r in runs) / 2)
        assert float(table[0]["eps_f_mean"]) == pytest.approx(sum(r.train.eps_f for r in runs) / 2)

    def test_outputs_are_deterministic(self, tmp_path, tiny_experiment):
        """Test that re-running the experiment reproduces every CSV byte for byte."""
        first = run_experiment(tiny_experiment, tmp_path / "a")
        second = run_experiment(tiny_experiment, tmp_path / "b")

        csv_names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
        assert csv_names
        for name in csv_names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert first.exit_code == second.exit_code == 0

    def test_failed_runs(self, tmp_path, tiny_experiment):
        """Test that invalid runs leave failure records, blank cells and exit code 2."""
        base = tiny_experiment.base.model_copy(update={"boundary_count": 3})
        experiment = tiny_experiment.model_copy(update={"base": base, "variants": tiny_experiment.variants[:1]})

        outcome = run_experiment(experiment, tmp_path)

        assert outcome.exit_code == 2
        assert all(isinstance(r, RunFailure) for r in outcome.records)
        record = json.loads((tmp_path / "tiny-sin_x_seed0.json").read_text(encoding="utf-8"))
        assert record["error_code"] == "CONFIG_ERROR"
        assert read_csv(outcome.table_path)[0]["eps_u_mean"] == ""


class TestTable:
    """Tests for the aggregate table and exit codes."""

    def test_single_seed_leaves_blanks(self, tmp_path, tiny_experiment):
        """Test that a variant with one run gets empty statistics."""
        summary = run_experiment(
            tiny_experiment.model_copy(update={
                "base": tiny_experiment.base.model_copy(update={"seeds": [0], "residual": None}),
                "variants": tiny_experiment.variants[:1],
            }),
            tmp_path,
        )
        rows = read_csv(summary.table_path)

        assert list(rows[0].keys()) == table_header(with_residual=False)
        assert rows[0]["eps_u_mean"] == "" and rows[0]["eps_u_std"] == ""

    def test_write_table_without_records(self, tmp_path):
        """Test that variants without runs still get a row."""
        path = write_table(tmp_path / "t.csv", [Variant(name="a")], [], with_residual=False)

        assert read_csv(path) == [{"variant": "a", "eps_u_mean": "", "eps_u_std": "",
                                   "eps_f_mean": "", "eps_f_std": ""}]

    def test_exit_codes(self):
        """Test 0 for success, 3 for numerical failures, 2 otherwise."""
        assert exit_code_for([]) == 0
        assert exit_code_for([_failure("CONFIG_ERROR")]) == 2
        assert exit_code_for([_failure("METRIC_UNDEFINED")]) == 2
        assert exit_code_for([_failure("CONFIG_ERROR"), _failure("DIVERGED")]) == 3
        assert exit_code_for([_failure("NUMERICAL_FAILURE")]) == 3
