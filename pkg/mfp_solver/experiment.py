"""
Experiment runner: variants x seeds through the seed-run workflow.

Artifacts per run (stem = <label>-<variant_slug>_seed<k>):
- <stem>.json                      RunSummary or RunFailure
- <stem>_history.csv               first-stage history
- <stem>_residual_history.csv      residual-stage history
- <stem>_{best,final}.ckpt         first-stage checkpoints (scaled back)
- <stem>_residual_{best,final}.ckpt
- <stem>_{interior,boundary}.csv   training points (no boundary file for regression)
Per experiment: <label>_table.csv with mean and std per metric and variant.

File formats: docs/formats.md
"""

import json
import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from common.models import CheckpointHeader, ExperimentConfig, RunFailure, RunSummary, TrainConfig, Variant
from mfp_solver.checkpoint import save_checkpoint
from mfp_solver.config import get_settings
from mfp_solver.constants import EXIT_CONFIG_ERROR, EXIT_DIVERGED, EXIT_OK
from mfp_solver.exceptions import ConfigurationError, MetricUndefinedError, NumericalFailureError, TrainingDivergedError
from mfp_solver.metrics import aggregate_reports
from mfp_solver.sampling import write_points_csv
from mfp_solver.training import RunResult
from mfp_solver.utils.console import log_info, log_summary, log_table, log_warning
from mfp_solver.utils.formatters import format_float, write_csv, write_json
from mfp_solver.utils.paths import resolve_from_project_root
from mfp_solver.workflow import get_workflow

logger = logging.getLogger(__name__)

RunRecord = Union[RunSummary, RunFailure]

_HISTORY_HEADER = ["epoch", "loss", "eps_u", "eps_f"]
_SPECTRUM_HEADER = ["alpha_low", "alpha_high"]


class ExperimentOutcome(NamedTuple):
    """Records of every run and the written table"""
    records: List[RunRecord]
    table_path: Path
    exit_code: int


def load_experiment(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read and validate an experiment JSON file.

    A relative path missing from the working directory is looked up under
    the project root, so bundled configs load from anywhere.

    Raises:
        ConfigurationError: If the file is missing, not JSON or fails validation.
    """
    path = Path(path)
    if not path.exists():
        path = resolve_from_project_root(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigurationError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config file {path} is not valid JSON: {e}") from e
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid experiment config {path}:\n{e}") from e


def apply_overrides(
    experiment: ExperimentConfig,
    seed_offset: int = 0,
    epochs_override: Optional[int] = None
) -> ExperimentConfig:
    """
    Shift seeds (uniform_seed included) and replace every epoch budget.

    epochs_override applies to the base config, each variant and the
    residual stage.
    """
    data = experiment.model_dump()
    base = data["base"]
    base["seeds"] = [s + seed_offset for s in base["seeds"]]
    if base["uniform_seed"] is not None:
        base["uniform_seed"] += seed_offset
    if epochs_override is not None:
        if epochs_override < 0:
            raise ConfigurationError("--epochs-override must be >= 0")
        base["epochs"] = epochs_override
        if base["residual"] is not None:
            base["residual"]["epochs"] = epochs_override
        for variant in data["variants"]:
            if variant["epochs"] is not None:
                variant["epochs"] = epochs_override
    return ExperimentConfig.model_validate(data)


def run_stem(label: str, variant: Variant, seed: int) -> str:
    return f"{label}-{variant.slug}_seed{seed}"


def _history_rows(result: RunResult, with_spectrum: bool):
    for row in result.history:
        cells = [row.epoch, row.loss, row.eps_u, row.eps_f]
        if with_spectrum:
            cells += [row.alpha_low, row.alpha_high]
        yield cells


def write_stage_artifacts(
    out_dir: Path,
    stem: str,
    role: str,
    result: RunResult,
    config: TrainConfig,
    seed: int
) -> None:
    """History CSV and best/final checkpoints of one stage"""
    suffix = "" if role == "primary" else "_residual"
    header = _HISTORY_HEADER + (_SPECTRUM_HEADER if config.track_spectrum else [])
    write_csv(out_dir / f"{stem}{suffix}_history.csv", header,
              _history_rows(result, config.track_spectrum))
    scale_b = config.scale_b if role == "primary" else 1.0
    final_epoch = result.epochs
    for tag, params, epoch, loss in (
        ("best", result.best_params, result.best_epoch, result.best_loss),
        ("final", result.final_params, final_epoch, result.final_loss),
    ):
        header_model = CheckpointHeader(
            spec=result.spec, seed=seed, epoch=epoch, loss=loss,
            problem=config.problem, scale_b=scale_b, role=role
        )
        save_checkpoint(out_dir / f"{stem}{suffix}_{tag}.ckpt", header_model, params)


def run_seed(
    config: TrainConfig,
    seed: int,
    label: str,
    variant: Variant,
    out_dir: Path
) -> RunRecord:
    """
    Run the workflow for one seed and write its artifacts.

    Stage artifacts are written for every stage that finished, so a
    diverged residual stage still leaves the first stage on disk.

    Returns:
        RunSummary on success, RunFailure otherwise.
    """
    state = get_workflow().invoke({
        "config": config,
        "seed": seed,
        "label": label,
        "variant": variant.name,
    })
    stem = run_stem(label, variant, seed)
    record = state["final_response"]
    if state.get("primary") is not None:
        write_stage_artifacts(out_dir, stem, "primary", state["primary"], config, seed)
    if state.get("residual") is not None:
        write_stage_artifacts(out_dir, stem, "residual", state["residual"], config, seed)
    for kind in ("interior", "boundary"):
        if state.get(kind) is not None:
            write_points_csv(state[kind], out_dir / f"{stem}_{kind}.csv")
    write_json(out_dir / f"{stem}.json", record)

    if isinstance(record, RunSummary):
        rows = [
            ("eps_u(X)", format_float(record.train.eps_u)),
            ("eps_u(X~)", format_float(record.test.eps_u)),
            ("eps_f(X)", format_float(record.train.eps_f)),
            ("eps_u_r(X~)", format_float(record.test.eps_u_r)),
            ("eps_f_r(X)", format_float(record.train.eps_f_r)),
            ("best epoch", str(record.primary.best_epoch)),
            ("wall time [s]", f"{record.wall_time:.1f}"),
        ]
        log_summary(f"{label} / {variant.name} / seed {seed}", [r for r in rows if r[1]])
    return record


def _run_task(task: Tuple[TrainConfig, int, str, Variant, str]) -> RunRecord:
    """Worker-pool entry point"""
    config, seed, label, variant, out_dir = task
    return run_seed(config, seed, label, variant, Path(out_dir))


def table_header(with_residual: bool) -> List[str]:
    metrics = ["eps_u", "eps_f"] + (["eps_u_r", "eps_f_r"] if with_residual else [])
    header = ["variant"]
    for name in metrics:
        header += [f"{name}_mean", f"{name}_std"]
    return header


def write_table(
    path: Path,
    variants: Sequence[Variant],
    records: Sequence[RunRecord],
    with_residual: bool
) -> Path:
    """
    Aggregate table: one row per variant, mean and std per metric.

    Cells stay empty for metrics a problem does not define and for variants
    with fewer than two successful runs.
    """
    header = table_header(with_residual)
    metrics = [h[:-5] for h in header[1::2]]
    rows = []
    for variant in variants:
        runs = [r for r in records if isinstance(r, RunSummary) and r.variant == variant.name]
        try:
            stats = aggregate_reports(runs)
        except MetricUndefinedError as e:
            log_warning(f"{variant.name}: {e}")
            stats = {}
        row = [variant.name]
        for name in metrics:
            mean, std = stats.get(name, (None, None))
            row += [mean, std]
        rows.append(row)
    write_csv(path, header, rows)
    log_table(path.stem, header, [[c if isinstance(c, str) else format_float(c) for c in r] for r in rows])
    return path


def exit_code_for(records: Sequence[RunRecord]) -> int:
    """0 when every run succeeded, 3 on divergence, 2 on configuration errors"""
    codes = {r.error_code for r in records if isinstance(r, RunFailure)}
    numerical = {TrainingDivergedError.error_code, NumericalFailureError.error_code}
    if codes & numerical:
        return EXIT_DIVERGED
    if codes:
        return EXIT_CONFIG_ERROR
    return EXIT_OK


def run_experiment(
    experiment: ExperimentConfig,
    out_dir: Path,
    jobs: Optional[int] = None
) -> ExperimentOutcome:
    """
    Run every variant x seed and write the aggregate table.

    Seed-runs are independent; with jobs > 1 they go to a spawn-based
    process pool. The table is written once after all runs join, in
    variant order.
    """
    settings = get_settings()
    jobs = jobs or settings.mfp_jobs
    tasks = []
    for variant in experiment.variants:
        config = variant.apply(experiment.base)
        for seed in config.seeds:
            tasks.append((config, seed, experiment.label, variant, str(out_dir)))
    log_info(f"Experiment {experiment.label}: {len(experiment.variants)} variants, "
             f"{len(tasks)} runs, {jobs} worker(s), output {out_dir}")

    if jobs > 1:
        context = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=context) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(task) for task in tasks]

    table_path = write_table(
        out_dir / f"{experiment.label}_table.csv",
        experiment.variants,
        records,
        with_residual=experiment.base.residual is not None,
    )
    return ExperimentOutcome(records, table_path, exit_code_for(records))
