"""
Command-line entry point.

Subcommands:
    run <config>        Run an experiment (variants x seeds) and write its table
    eval <ckpt>         Errors of a checkpoint on a uniform grid, optional plot dump
    spectrum <ckpt>     DFT amplitudes of the solution error or the PDE residual
    check               Finite-difference and identity self-checks

Run with:
    python -m mfp_solver.main run configs/poisson1d_desk.json --jobs 3

Exit codes: 0 success, 1 self-check failed, 2 configuration error, 3 divergence.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from common.models import MlpSpec, ProblemRef
from mfp_solver.autodiff import jet_forward
from mfp_solver.checkpoint import load_checkpoint
from mfp_solver.config import get_settings
from mfp_solver.constants import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_DIVERGED,
    EXIT_OK,
    SPECTRUM_POINTS,
    TEST_GRID_1D,
    TEST_GRID_2D,
)
from mfp_solver.exceptions import ConfigurationError, MfpError, NumericalFailureError
from mfp_solver.experiment import apply_overrides, load_experiment, run_experiment
from mfp_solver.metrics import dft_amplitudes, write_spectrum_csv
from mfp_solver.problems import PoissonProblem, Problem, build_problem
from mfp_solver.sampling import periodic_grid, uniform_grid
from mfp_solver.selfcheck import run_self_checks
from mfp_solver.training import composite_jet, error_report, evaluate_chunked
from mfp_solver.utils.console import log_error, log_info, log_summary
from mfp_solver.utils.formatters import format_float, write_csv
from mfp_solver.utils.paths import get_output_dir

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfp",
        description="Multi-frequency Poisson solver: domain scaling and residual correction"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment config")
    run.add_argument("config", type=Path)
    run.add_argument("--jobs", type=int, default=None, help="Worker processes (default MFP_JOBS)")
    run.add_argument("--out", default=None, help="Output directory (overrides MFP_OUT and the config)")
    run.add_argument("--seed-offset", type=int, default=0)
    run.add_argument("--epochs-override", type=int, default=None)

    ev = sub.add_parser("eval", help="Evaluate a checkpoint on a uniform grid")
    ev.add_argument("checkpoint", type=Path)
    ev.add_argument("--problem", choices=["regression", "poisson1d", "poisson2d"], default=None,
                    help="Problem (default: the one stored in the checkpoint)")
    ev.add_argument("--n", type=int, default=None, help="Frequency terms for poisson2d")
    ev.add_argument("--grid", type=int, default=None, help="Grid size (default 100000 in 1D, 1000000 in 2D)")
    ev.add_argument("--residual", type=Path, default=None, help="Residual checkpoint; evaluates N + N_r")
    ev.add_argument("--dump", type=Path, default=None, help="Write per-point values to this CSV")

    sp = sub.add_parser("spectrum", help="DFT amplitudes on the periodic grid (1D only)")
    sp.add_argument("checkpoint", type=Path)
    sp.add_argument("--n", type=int, default=SPECTRUM_POINTS, help="Number of grid points N")
    sp.add_argument("--source", choices=["solution", "residual"], default="solution",
                    help="u - N (solution) or f + lap N (residual)")
    sp.add_argument("--problem", choices=["regression", "poisson1d"], default=None)
    sp.add_argument("--residual", type=Path, default=None, help="Residual checkpoint; uses N + N_r")
    sp.add_argument("--out", type=Path, default=None, help="CSV path (default <checkpoint>_spectrum.csv)")

    check = sub.add_parser("check", help="Run the self-checks")
    check.add_argument("--seed", type=int, default=0)
    return parser


def _resolve_problem(header_problem: Optional[ProblemRef], name: Optional[str], n: Optional[int]) -> Problem:
    """Problem from the CLI flags, falling back to the checkpoint header"""
    if name is not None:
        return build_problem(ProblemRef(name=name, n=n))
    if header_problem is None:
        raise ConfigurationError("Checkpoint names no problem; pass --problem")
    return build_problem(header_problem)


def _load_networks(
    path: Path,
    residual_path: Optional[Path],
    dim: int
) -> Tuple[Tuple[MlpSpec, jax.Array], Optional[Tuple[MlpSpec, jax.Array]]]:
    """Primary (and residual) network from checkpoints, checked against the problem dimension"""
    header, params = load_checkpoint(path)
    if header.spec.input_dim != dim:
        raise ConfigurationError(
            f"Checkpoint network has input_dim={header.spec.input_dim}, problem is {dim}D"
        )
    residual = None
    if residual_path is not None:
        r_header, r_params = load_checkpoint(residual_path)
        if r_header.spec.input_dim != dim:
            raise ConfigurationError("Residual checkpoint does not match the problem dimension")
        residual = (r_header.spec, r_params)
    return (header.spec, params), residual


def cmd_run(args: argparse.Namespace) -> int:
    experiment = apply_overrides(load_experiment(args.config), args.seed_offset, args.epochs_override)
    out_dir = get_output_dir(args.out, experiment.output_dir)
    outcome = run_experiment(experiment, out_dir, args.jobs)
    log_info(f"Table written to {outcome.table_path}")
    return outcome.exit_code


def cmd_eval(args: argparse.Namespace) -> int:
    header, _ = load_checkpoint(args.checkpoint)
    problem = _resolve_problem(header.problem, args.problem, args.n)
    primary, residual = _load_networks(args.checkpoint, args.residual, problem.domain.dim)
    count = args.grid or (TEST_GRID_1D if problem.domain.dim == 1 else TEST_GRID_2D)
    points = uniform_grid(problem.domain, count).points

    report = error_report(problem, primary, residual, points, "test")
    print(report.model_dump_json(indent=2))
    log_summary(f"eval {args.checkpoint.name} on {count} points", [
        (name, format_float(value))
        for name, value in report.model_dump(exclude={"dataset"}).items() if value is not None
    ])
    if args.dump is not None:
        write_dump(args.dump, problem, primary, residual, points)
        log_info(f"Per-point values written to {args.dump}")
    return EXIT_OK


def write_dump(
    path: Path,
    problem: Problem,
    primary: Tuple[MlpSpec, jax.Array],
    residual: Optional[Tuple[MlpSpec, jax.Array]],
    points: np.ndarray
) -> Path:
    """
    Per-point plot data: coordinates, u, N, u - N, and for Poisson problems
    f and -lap N. With a residual network N stands for the composite N + N_r.
    """
    x = jnp.asarray(points)
    is_pde = isinstance(problem, PoissonProblem)
    u = np.asarray(problem.exact_u(x) if is_pde else problem.u(x))
    n_vals, lap = evaluate_chunked(primary[0], primary[1], points, with_lap=True)
    if residual is not None:
        r_vals, r_lap = evaluate_chunked(residual[0], residual[1], points, with_lap=True)
        n_vals, lap = n_vals + r_vals, lap + r_lap
    coords = ["x", "y"][:points.shape[1]]
    header = coords + ["u", "N", "u_minus_N"] + (["f", "minus_lap_N"] if is_pde else [])
    f = np.asarray(problem.f(x)) if is_pde else None

    def rows():
        for i in range(points.shape[0]):
            row = [float(c) for c in points[i]] + [float(u[i]), float(n_vals[i]), float(u[i] - n_vals[i])]
            if is_pde:
                row += [float(f[i]), float(-lap[i])]
            yield row

    return write_csv(path, header, rows())


def cmd_spectrum(args: argparse.Namespace) -> int:
    header, _ = load_checkpoint(args.checkpoint)
    problem = _resolve_problem(header.problem, args.problem, None)
    if problem.domain.dim != 1:
        raise ConfigurationError("Spectra are only defined for 1D problems")
    primary, residual = _load_networks(args.checkpoint, args.residual, 1)
    grid = periodic_grid(problem.domain, args.n).points
    x = jnp.asarray(grid)
    if residual is not None:
        jet = composite_jet(primary[0], primary[1], residual[0], residual[1], x)
    else:
        jet = jet_forward(primary[0], primary[1], x)

    if args.source == "residual":
        if not isinstance(problem, PoissonProblem):
            raise ConfigurationError("--source residual needs a Poisson problem")
        sequence = np.asarray(problem.f(x)) + np.asarray(jet.spatial_lap)
    else:
        u = problem.exact_u(x) if isinstance(problem, PoissonProblem) else problem.u(x)
        sequence = np.asarray(u) - np.asarray(jet.value)

    report = dft_amplitudes(sequence, grid)
    out = args.out or args.checkpoint.with_name(f"{args.checkpoint.stem}_spectrum.csv")
    write_spectrum_csv(report, out)
    log_summary(f"spectrum ({args.source}) of {args.checkpoint.name}, N={args.n}", [
        ("alpha_low |F_2|", format_float(report.alpha_low)),
        ("alpha_high |F_50|", format_float(report.alpha_high)),
        ("csv", str(out)),
    ])
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    results = run_self_checks(args.seed)
    failed = [r for r in results if not r.passed]
    log_info(f"{len(results) - len(failed)}/{len(results)} self-checks passed")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "eval": cmd_eval,
    "spectrum": cmd_spectrum,
    "check": cmd_check,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and dispatch.

    Returns:
        Process exit code.
    """
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, settings.mfp_log_level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    args = build_parser().parse_args(argv)
    try:
        settings.validate_runtime()
        return COMMANDS[args.command](args)
    except ValueError as e:
        # ConfigurationError, MetricUndefinedError and pydantic ValidationError
        log_error("Configuration error", str(e))
        return EXIT_CONFIG_ERROR
    except NumericalFailureError as e:
        log_error("Numerical failure", str(e))
        return EXIT_DIVERGED
    except MfpError as e:
        log_error(f"Run failed ({e.error_code})", str(e))
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
