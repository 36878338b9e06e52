"""
Loss assembly and the two training stages.

Stage one trains a network on the (optionally scaled) problem and
materializes the scaled-back parameters theta_s. Stage two trains a
correction network on the residual equation of N(.; theta_s); the final
approximation is the composite N + N_r.

Epoch e denotes the parameters after e full-batch Adam steps. The loss is
recorded at epoch 0, every eval_every epochs and at the last epoch; the
best-loss snapshot is taken among those records only.
"""

import logging
import math
import time
from functools import lru_cache
from typing import Callable, List, NamedTuple, Optional, Tuple

import jax
import jax.numpy as jnp
import numpy as np
from pydantic import BaseModel, ConfigDict

from common.models import ErrorReport, HistoryRow, MlpSpec, StageSummary, TrainConfig
from mfp_solver.autodiff import Jet, jet_forward, loss_and_param_gradient
from mfp_solver.config import get_settings
from mfp_solver.constants import BOUNDARY_WEIGHT, RESIDUAL_RHS_RTOL, RESIDUAL_SEED_OFFSET, SPECTRUM_POINTS
from mfp_solver.exceptions import (
    ConfigurationError,
    MetricUndefinedError,
    NumericalFailureError,
    TrainingDivergedError,
)
from mfp_solver.metrics import dft_amplitudes, rel_l2_error, rel_residual_error
from mfp_solver.network import forward, init_xavier_normal
from mfp_solver.optimizer import adam_init, adam_update
from mfp_solver.problems import (
    PoissonProblem,
    Problem,
    RegressionTarget,
    build_problem,
    make_residual_problem,
    scale_back_materialize,
    scale_problem,
)
from mfp_solver.sampling import PointSet, periodic_grid, training_sets
from mfp_solver.utils.console import log_progress, log_warning

logger = logging.getLogger(__name__)


class RunResult(BaseModel):
    """
    Outcome of one training stage.

    Parameters are in the original domain (scaled back for scaled runs).

    Attributes:
        spec: Architecture of the trained network
        final_params: Parameters at the last epoch
        best_params: Parameters at the recorded epoch with the smallest loss
        best_epoch: Epoch of best_params
        best_loss: Smallest recorded loss
        final_loss: Loss at the last epoch
        history: Recorded loss and training-set errors, one row per eval epoch
        wall_time: Seconds spent in the stage
        w1: Interior weight (Poisson problems)
    """
    spec: MlpSpec
    final_params: jax.Array
    best_params: jax.Array
    best_epoch: int
    best_loss: float
    final_loss: float
    history: List[HistoryRow]
    wall_time: float
    w1: Optional[float] = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def epochs(self) -> int:
        return self.history[-1].epoch if self.history else 0

    def summary(self) -> StageSummary:
        return StageSummary(
            epochs=self.epochs,
            best_epoch=self.best_epoch,
            best_loss=self.best_loss,
            final_loss=self.final_loss,
            w1=self.w1,
            wall_time=self.wall_time,
        )


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def weight_w1(f_values) -> float:
    """
    Interior weight |X| / sum f(x)^2.

    Raises:
        MetricUndefinedError: If f vanishes on every point; use w1 = 1 then.
    """
    f = np.asarray(f_values, dtype=np.float64)
    total = float(np.sum(f * f))
    if f.size == 0 or total == 0.0:
        raise MetricUndefinedError(
            "Right-hand side is identically zero on the training set; use w1 = 1"
        )
    return f.size / total


def _pde_loss_from_values(
    spec: MlpSpec,
    params: jax.Array,
    x_int: jax.Array,
    f_vals: jax.Array,
    x_bdy: jax.Array,
    g_vals: jax.Array,
    w1: float,
    w2: float
) -> jax.Array:
    """w1 * mean (f + lap N)^2 + w2 * mean (g - N)^2 with precomputed f and g"""
    interior = jnp.mean((f_vals + jet_forward(spec, params, x_int).spatial_lap) ** 2)
    boundary = jnp.mean((g_vals - forward(spec, params, x_bdy)) ** 2)
    return w1 * interior + w2 * boundary


def pde_loss(
    spec: MlpSpec,
    params: jax.Array,
    problem: PoissonProblem,
    x_int: PointSet,
    x_bdy: PointSet,
    w1: float,
    w2: float = BOUNDARY_WEIGHT
) -> jax.Array:
    """
    Collocation loss of a Poisson problem.

    Scaled problems use the same code path; they differ in fields and domain.

    Raises:
        ConfigurationError: If either point set is empty.
    """
    if x_int.count == 0 or x_bdy.count == 0:
        raise ConfigurationError("Interior and boundary point sets must be nonempty")
    xi = jnp.asarray(x_int.points)
    xb = jnp.asarray(x_bdy.points)
    return _pde_loss_from_values(spec, params, xi, problem.f(xi), xb, problem.g(xb), w1, w2)


def _regression_loss_from_values(spec: MlpSpec, params: jax.Array, x: jax.Array, u_vals: jax.Array) -> jax.Array:
    """mean (N - u)^2 with precomputed u"""
    return jnp.mean((forward(spec, params, x) - u_vals) ** 2)


def regression_loss(spec: MlpSpec, params: jax.Array, target: RegressionTarget, x: PointSet) -> jax.Array:
    """Mean squared error (1/|X|) sum (N(x) - u(x))^2"""
    if x.count == 0:
        raise ConfigurationError("Regression point set must be nonempty")
    xs = jnp.asarray(x.points)
    return _regression_loss_from_values(spec, params, xs, target.u(xs))


def _interior_weight(f_vals: jax.Array, stage: str, reference: Optional[jax.Array] = None) -> float:
    """w1 from f_vals; 1 when f_vals vanish (relative to reference, if given)"""
    if reference is not None:
        ref_norm = float(jnp.linalg.norm(reference))
        if float(jnp.linalg.norm(f_vals)) <= RESIDUAL_RHS_RTOL * ref_norm:
            log_warning(f"[{stage}] residual right-hand side is negligible, using w1 = 1")
            return 1.0
    try:
        return weight_w1(f_vals)
    except MetricUndefinedError:
        log_warning(f"[{stage}] right-hand side vanishes on the training set, using w1 = 1")
        return 1.0


# ---------------------------------------------------------------------------
# Evaluation helpers
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _compiled_jet(spec: MlpSpec) -> Callable[[jax.Array, jax.Array], Jet]:
    return jax.jit(lambda params, x: jet_forward(spec, params, x))


@lru_cache(maxsize=None)
def _compiled_forward(spec: MlpSpec) -> Callable[[jax.Array, jax.Array], jax.Array]:
    return jax.jit(lambda params, x: forward(spec, params, x))


def composite_eval(
    spec: MlpSpec,
    params: jax.Array,
    residual_spec: MlpSpec,
    residual_params: jax.Array,
    x: jax.Array
) -> jax.Array:
    """U(x) = N(x; theta_s) + N_r(x; theta_r)"""
    return forward(spec, params, x) + forward(residual_spec, residual_params, x)


def composite_jet(
    spec: MlpSpec,
    params: jax.Array,
    residual_spec: MlpSpec,
    residual_params: jax.Array,
    x: jax.Array
) -> Jet:
    """Jet of the composite N + N_r (componentwise sum)"""
    a = jet_forward(spec, params, x)
    r = jet_forward(residual_spec, residual_params, x)
    return Jet(a.value + r.value, a.spatial_grad + r.spatial_grad, a.spatial_lap + r.spatial_lap)


def evaluate_chunked(spec: MlpSpec, params: jax.Array, points: np.ndarray, with_lap: bool) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Values (and Laplacians) on a large point set, chunk by chunk"""
    chunk = get_settings().mfp_eval_chunk
    values, laps = [], []
    for start in range(0, points.shape[0], chunk):
        x = jnp.asarray(points[start:start + chunk])
        if with_lap:
            jet = _compiled_jet(spec)(params, x)
            values.append(np.asarray(jet.value))
            laps.append(np.asarray(jet.spatial_lap))
        else:
            values.append(np.asarray(_compiled_forward(spec)(params, x)))
    return np.concatenate(values), (np.concatenate(laps) if with_lap else None)


def _reference_values(problem: Problem, points: np.ndarray) -> np.ndarray:
    if isinstance(problem, RegressionTarget):
        return np.asarray(problem.u(jnp.asarray(points)))
    if problem.exact_u is None:
        raise ConfigurationError(f"Problem {problem.name} has no exact solution to measure against")
    return np.asarray(problem.exact_u(jnp.asarray(points)))


def error_report(
    problem: Problem,
    primary: Tuple[MlpSpec, jax.Array],
    residual: Optional[Tuple[MlpSpec, jax.Array]],
    points: np.ndarray,
    dataset: str
) -> ErrorReport:
    """
    Relative errors of N and of the composite N + N_r on a point set.

    Args:
        problem: Original (unscaled) problem.
        primary: (spec, theta_s) of the first stage.
        residual: (spec, theta_r) of the correction stage, if any.
        points: Points (n, d) in the original domain.
        dataset: "train" or "test".

    Returns:
        ErrorReport; eps_f fields stay None for regression targets.
    """
    is_pde = isinstance(problem, PoissonProblem)
    u = _reference_values(problem, points)
    n_vals, n_lap = evaluate_chunked(primary[0], primary[1], points, with_lap=is_pde)
    report = {"dataset": dataset, "eps_u": rel_l2_error(u, n_vals)}
    if is_pde:
        f = np.asarray(problem.f(jnp.asarray(points)))
        report["eps_f"] = rel_residual_error(f, n_lap)
        if residual is not None:
            r_vals, r_lap = evaluate_chunked(residual[0], residual[1], points, with_lap=True)
            report["eps_u_r"] = rel_l2_error(u, n_vals + r_vals)
            report["eps_f_r"] = rel_residual_error(f, n_lap + r_lap)
    return ErrorReport(**report)


class _TrainingReference(NamedTuple):
    """Quantities the per-eval errors are measured against, original domain"""
    x: jax.Array
    u: np.ndarray
    f: Optional[np.ndarray]
    base_value: np.ndarray
    base_lap: np.ndarray
    grid: Optional[jax.Array]
    grid_error: Optional[np.ndarray]


def _make_recorder(spec: MlpSpec, b: float, ref: _TrainingReference):
    """Build the callback turning (params_hat, epoch, loss) into a HistoryRow"""
    jet_fn = _compiled_jet(spec)
    fwd_fn = _compiled_forward(spec)

    def record(params_hat: jax.Array, epoch: int, loss: float) -> HistoryRow:
        params = scale_back_materialize(spec, params_hat, b)
        if ref.f is None:
            values = np.asarray(fwd_fn(params, ref.x))
            eps_f = None
        else:
            jet = jet_fn(params, ref.x)
            values = np.asarray(jet.value)
            eps_f = rel_residual_error(ref.f, ref.base_lap + np.asarray(jet.spatial_lap))
        row = {
            "epoch": epoch,
            "loss": loss,
            "eps_u": rel_l2_error(ref.u, ref.base_value + values),
            "eps_f": eps_f,
        }
        if ref.grid is not None:
            spectrum = dft_amplitudes(ref.grid_error - np.asarray(fwd_fn(params, ref.grid)))
            row["alpha_low"] = spectrum.alpha_low
            row["alpha_high"] = spectrum.alpha_high
        return HistoryRow(**row)

    return record


# ---------------------------------------------------------------------------
# Optimization loop
# ---------------------------------------------------------------------------

class _FitOutcome(NamedTuple):
    final: jax.Array
    best: jax.Array
    best_epoch: int
    best_loss: float
    final_loss: float
    history: List[HistoryRow]


def _fit(
    loss_fn: Callable[[jax.Array], jax.Array],
    params: jax.Array,
    epochs: int,
    lr: float,
    every: int,
    record: Callable[[jax.Array, int, float], HistoryRow],
    stage: str
) -> _FitOutcome:
    """Full-batch Adam with best-loss bookkeeping and the divergence guard"""
    settings = get_settings()
    threshold = settings.mfp_divergence_threshold
    progress_every = settings.mfp_progress_every
    state = adam_init(params, lr)

    def step(p, m, v, t):
        loss, grad = jax.value_and_grad(loss_fn)(p)
        new_p, m, v, t = adam_update(p, grad, m, v, t, state.lr, state.beta1, state.beta2, state.eps)
        return loss, jnp.all(jnp.isfinite(grad)), new_p, m, v, t

    step = jax.jit(step)
    loss_only = jax.jit(loss_fn)
    m, v, t = state.m, state.v, jnp.asarray(state.t, dtype=jnp.int32)

    history: List[HistoryRow] = []
    best, best_epoch, best_loss = params, 0, math.inf
    loss = math.inf
    for epoch in range(epochs + 1):
        if epoch < epochs:
            loss_arr, grad_ok, new_params, m, v, t = step(params, m, v, t)
        else:
            loss_arr, grad_ok, new_params = loss_only(params), True, params
        loss = float(loss_arr)
        if not math.isfinite(loss) or loss > threshold:
            raise TrainingDivergedError(epoch, loss, stage)
        if not bool(grad_ok):
            # Locate the offending entry; raises NumericalFailureError
            loss_and_param_gradient(loss_fn, params)
            raise NumericalFailureError(f"[{stage}] non-finite gradient at epoch {epoch}")

        if epoch % every == 0 or epoch == epochs:
            row = record(params, epoch, loss)
            history.append(row)
            if loss < best_loss:
                best, best_epoch, best_loss = params, epoch, loss
            if progress_every and (epoch % progress_every == 0 or epoch == epochs):
                log_progress(stage, epoch, epochs, loss, best_loss, row.eps_u)
        params = new_params

    logger.debug("%s finished: best loss %r at epoch %d", stage, best_loss, best_epoch)
    return _FitOutcome(params, best, best_epoch, best_loss, loss, history)


def _eval_every(config: TrainConfig) -> int:
    return 1 if config.track_every_epoch else config.eval_every


def _spectrum_reference(problem: Problem, config: TrainConfig, base: Optional[Tuple[MlpSpec, jax.Array]] = None):
    """Grid and u - base on it for the amplitude history, or (None, None)"""
    if not config.track_spectrum:
        return None, None
    grid = jnp.asarray(periodic_grid(problem.domain, SPECTRUM_POINTS).points)
    target = _reference_values(problem, np.asarray(grid))
    if base is not None:
        target = target - np.asarray(forward(base[0], base[1], grid))
    return grid, target


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def train_scaled(
    config: TrainConfig,
    seed: int,
    problem: Optional[Problem] = None,
    interior: Optional[PointSet] = None,
    boundary: Optional[PointSet] = None
) -> RunResult:
    """
    First stage on the domain scaled by config.scale_b.

    Builds the scaled problem, maps the training points by b, trains N^ and
    returns the scaled-back parameters theta_s. History errors are measured
    in the original domain. With b = 1 every transform is the identity.

    Args:
        config: Run configuration.
        seed: Training-set and init seed.
        problem: Original problem (built from config when omitted).
        interior, boundary: Training sets in the original domain (sampled when omitted).

    Raises:
        ConfigurationError: For invalid configurations.
        TrainingDivergedError: If the loss leaves the finite range.
    """
    started = time.perf_counter()
    problem = problem if problem is not None else build_problem(config.problem)
    is_pde = isinstance(problem, PoissonProblem)
    if interior is None or (is_pde and boundary is None):
        interior, boundary = training_sets(problem.domain, config, seed, with_boundary=is_pde)
    if interior.dim != config.spec.input_dim:
        raise ConfigurationError("Training points do not match the network input dimension")

    b = config.scale_b
    scaled = scale_problem(problem, b)
    spec = config.spec
    xi = jnp.asarray(interior.scaled(b).points)
    stage = f"primary seed={seed}"

    if is_pde:
        xb = jnp.asarray(boundary.scaled(b).points)
        f_vals = scaled.f(xi)
        g_vals = scaled.g(xb)
        w1 = _interior_weight(f_vals, stage)

        def loss_fn(p):
            return _pde_loss_from_values(spec, p, xi, f_vals, xb, g_vals, w1, BOUNDARY_WEIGHT)
    else:
        w1 = None
        u_vals = scaled.u(xi)

        def loss_fn(p):
            return _regression_loss_from_values(spec, p, xi, u_vals)

    x_orig = jnp.asarray(interior.points)
    grid, grid_error = _spectrum_reference(problem, config)
    ref = _TrainingReference(
        x=x_orig,
        u=_reference_values(problem, interior.points),
        f=np.asarray(problem.f(x_orig)) if is_pde else None,
        base_value=np.zeros(interior.count),
        base_lap=np.zeros(interior.count),
        grid=grid,
        grid_error=grid_error,
    )
    params0 = init_xavier_normal(spec, seed)
    outcome = _fit(loss_fn, params0, config.epochs, config.lr, _eval_every(config),
                   _make_recorder(spec, b, ref), stage)
    return RunResult(
        spec=spec,
        final_params=scale_back_materialize(spec, outcome.final, b),
        best_params=scale_back_materialize(spec, outcome.best, b),
        best_epoch=outcome.best_epoch,
        best_loss=outcome.best_loss,
        final_loss=outcome.final_loss,
        history=outcome.history,
        wall_time=time.perf_counter() - started,
        w1=w1,
    )


def train(
    config: TrainConfig,
    seed: int,
    problem: Optional[Problem] = None,
    interior: Optional[PointSet] = None,
    boundary: Optional[PointSet] = None
) -> RunResult:
    """
    First stage on the original domain.

    Raises:
        ConfigurationError: If config.scale_b is not 1 (use train_scaled).
    """
    if config.scale_b != 1.0:
        raise ConfigurationError(f"train() runs unscaled problems; scale_b={config.scale_b!r} needs train_scaled()")
    return train_scaled(config, seed, problem, interior, boundary)


def residual_stage(
    primary_spec: MlpSpec,
    primary_params: jax.Array,
    problem: PoissonProblem,
    config: TrainConfig,
    seed: int,
    interior: Optional[PointSet] = None,
    boundary: Optional[PointSet] = None
) -> RunResult:
    """
    Train the correction network N_r on the residual equation of N(.; theta_s).

    -lap N_r = f + lap N, N_r = g - N on the boundary, with w1 recomputed from
    f + lap N on the training set. History errors are those of the composite
    N + N_r on the training set.

    Args:
        primary_spec, primary_params: First-stage network in the original domain.
        problem: Original Poisson problem the first stage was trained on.
        config: Run configuration with a residual section.
        seed: Training-set seed; the init stream is seed + RESIDUAL_SEED_OFFSET.
        interior, boundary: Same training sets as the first stage (sampled when omitted).

    Raises:
        ConfigurationError: Without a residual section or for regression targets.
        TrainingDivergedError: If the loss leaves the finite range.
    """
    if config.residual is None:
        raise ConfigurationError("Config has no residual stage")
    if not isinstance(problem, PoissonProblem):
        raise ConfigurationError("Residual correction needs a Poisson problem")
    started = time.perf_counter()
    if interior is None or boundary is None:
        interior, boundary = training_sets(problem.domain, config, seed)

    residual_problem = make_residual_problem(problem, primary_spec, primary_params)
    spec = config.residual.spec
    stage = f"residual seed={seed}"
    xi = jnp.asarray(interior.points)
    xb = jnp.asarray(boundary.points)
    primary_jet = _compiled_jet(primary_spec)(primary_params, xi)
    f_orig = problem.f(xi)
    f_vals = f_orig + primary_jet.spatial_lap
    g_vals = residual_problem.g(xb)
    w1 = _interior_weight(f_vals, stage, reference=f_orig)

    def loss_fn(p):
        return _pde_loss_from_values(spec, p, xi, f_vals, xb, g_vals, w1, BOUNDARY_WEIGHT)

    grid, grid_error = _spectrum_reference(problem, config, base=(primary_spec, primary_params))
    ref = _TrainingReference(
        x=xi,
        u=_reference_values(problem, interior.points),
        f=np.asarray(f_orig),
        base_value=np.asarray(primary_jet.value),
        base_lap=np.asarray(primary_jet.spatial_lap),
        grid=grid,
        grid_error=grid_error,
    )
    params0 = init_xavier_normal(spec, seed + RESIDUAL_SEED_OFFSET)
    outcome = _fit(loss_fn, params0, config.residual.epochs, config.lr, _eval_every(config),
                   _make_recorder(spec, 1.0, ref), stage)
    return RunResult(
        spec=spec,
        final_params=outcome.final,
        best_params=outcome.best,
        best_epoch=outcome.best_epoch,
        best_loss=outcome.best_loss,
        final_loss=outcome.final_loss,
        history=outcome.history,
        wall_time=time.perf_counter() - started,
        w1=w1,
    )
