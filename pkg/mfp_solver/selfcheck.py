"""
Numerical self-checks run by `mfp check`.

Each check compares an implementation against an independent oracle
(finite differences, closed forms, identities) and reports the measured
discrepancy next to its tolerance.
"""

import math
from typing import Callable, List

import jax
import jax.numpy as jnp
import numpy as np
from pydantic import BaseModel

from common.models import ActivationSpec, Box, MlpSpec, ProblemRef, TrainConfig
from mfp_solver.autodiff import jet_forward, loss_param_gradient
from mfp_solver.metrics import dft_amplitudes
from mfp_solver.network import forward, init_xavier_normal
from mfp_solver.problems import (
    PoissonProblem,
    make_poisson_1d,
    make_poisson_2d,
    make_regression_target,
    scale_back_materialize,
)
from mfp_solver.sampling import latin_hypercube, philox_generator
from mfp_solver.training import train, train_scaled, weight_w1
from mfp_solver.utils.console import log_check

FD_GRAD_STEP = 1e-4
FD_LAP_STEP = 1e-3
FD_PARAM_STEP = 1e-5


class CheckResult(BaseModel):
    """Outcome of one self-check"""
    name: str
    passed: bool
    measured: float
    tolerance: float


def rel_norm_error(approx, exact) -> float:
    """||approx - exact|| / ||exact|| (absolute when exact vanishes)"""
    approx = np.asarray(approx, dtype=np.float64)
    exact = np.asarray(exact, dtype=np.float64)
    scale = float(np.linalg.norm(exact))
    diff = float(np.linalg.norm(approx - exact))
    return diff / scale if scale > 0.0 else diff


def fd_gradient(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float = FD_GRAD_STEP) -> np.ndarray:
    """Central differences of a batched field, shape (n, d)"""
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for k in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[k] = h
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2.0 * h))
    return np.stack(cols, axis=1)


def fd_laplacian(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float = FD_LAP_STEP) -> np.ndarray:
    """Sum of five-point central second differences per coordinate, shape (n,)"""
    x = np.asarray(x, dtype=np.float64)
    total = np.zeros(x.shape[0])
    for k in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[k] = h
        u = lambda shift: np.asarray(fn(x + shift * e))
        total += (-u(2) + 16.0 * u(1) - 30.0 * u(0) + 16.0 * u(-1) - u(-2)) / (12.0 * h * h)
    return total


def fd_param_gradient(loss: Callable[[jax.Array], jax.Array], params: jax.Array, indices, h: float = FD_PARAM_STEP) -> np.ndarray:
    """Central differences of a scalar loss over selected parameter indices"""
    out = []
    for i in indices:
        plus = params.at[i].add(h)
        minus = params.at[i].add(-h)
        out.append((float(loss(plus)) - float(loss(minus))) / (2.0 * h))
    return np.asarray(out)


def random_net(kind: str, dim: int, seed: int, hidden_layers: int = 2, width: int = 8):
    """Small Xavier-initialized net with parameters clipped to [-1, 1]"""
    spec = MlpSpec(input_dim=dim, hidden_layers=hidden_layers, width=width,
                   activation=ActivationSpec(kind=kind))
    return spec, jnp.clip(init_xavier_normal(spec, seed), -1.0, 1.0)


def zero_output(spec: MlpSpec, params: jax.Array) -> jax.Array:
    """Same net with readout weights and bias set to zero (N = 0)"""
    return params.at[-(spec.width + 1):].set(0.0)


def _check(name: str, measured: float, tolerance: float) -> CheckResult:
    result = CheckResult(name=name, passed=bool(measured <= tolerance), measured=measured, tolerance=tolerance)
    log_check(name, result.passed, f"measured={measured:.3e} tol={tolerance:.1e}")
    return result


def check_derivatives(seed: int, nets: int = 50) -> List[CheckResult]:
    """Jets vs finite differences, then parameter gradients vs finite differences"""
    worst_grad = worst_lap = 0.0
    kinds = ("tanh", "mish", "sin")
    for i in range(nets):
        kind, dim = kinds[i % 3], 1 + (i // 3) % 2
        spec, params = random_net(kind, dim, seed + i)
        x = latin_hypercube(_unit_domain(dim), 16, seed + i).points
        jet = jet_forward(spec, params, x)
        fn = lambda pts: forward(spec, params, jnp.asarray(pts))
        worst_grad = max(worst_grad, rel_norm_error(jet.spatial_grad, fd_gradient(fn, x)))
        worst_lap = max(worst_lap, rel_norm_error(jet.spatial_lap, fd_laplacian(fn, x)))

    worst_param = 0.0
    for i in range(6):
        kind, dim = kinds[i % 3], 1 + i % 2
        spec, params = random_net(kind, dim, seed + 100 + i)
        x = jnp.asarray(latin_hypercube(_unit_domain(dim), 8, seed + i).points)
        f = math.pi ** 2 * jnp.prod(jnp.sin(math.pi * x), axis=1) * dim

        def loss(p):
            return jnp.mean((f + jet_forward(spec, p, x).spatial_lap) ** 2)

        grad = np.asarray(loss_param_gradient(loss, params))
        rng = philox_generator(seed + i, 7)
        idx = np.sort(rng.choice(spec.param_count, size=min(40, spec.param_count), replace=False))
        worst_param = max(worst_param, rel_norm_error(grad[idx], fd_param_gradient(loss, params, idx)))

    return [
        _check("jet gradient vs finite differences", worst_grad, 1e-5),
        _check("jet Laplacian vs finite differences", worst_lap, 1e-5),
        _check("parameter gradient vs finite differences", worst_param, 1e-4),
    ]


def _unit_domain(dim: int) -> Box:
    return Box(lo=(-1.0,), hi=(1.0,)) if dim == 1 else Box(lo=(0.0, 0.0), hi=(1.0, 1.0))


def check_problems(seed: int) -> List[CheckResult]:
    """-lap u = f for the built-in Poisson problems"""
    results = []
    for problem in (make_poisson_1d(), make_poisson_2d(1), make_poisson_2d(5), make_poisson_2d(6)):
        x = latin_hypercube(problem.domain, 100, seed).points
        lap = fd_laplacian(lambda pts: problem.exact_u(jnp.asarray(pts)), x, h=1e-4)
        f = np.asarray(problem.f(jnp.asarray(x)))
        results.append(_check(f"{problem.name}: -lap u = f", rel_norm_error(-lap, f), 1e-6))
    return results


def check_scaling(seed: int) -> List[CheckResult]:
    """Scale-back identities and the b = 1 pipeline equivalence"""
    b = 16.0 * math.pi
    spec, params_hat = random_net("sin", 1, seed, hidden_layers=4, width=20)
    params_s = scale_back_materialize(spec, params_hat, b)
    x = latin_hypercube(make_poisson_1d().domain, 100, seed).points
    value_gap = float(np.max(np.abs(
        np.asarray(forward(spec, params_s, x)) - np.asarray(forward(spec, params_hat, b * x))
    )))
    lap_s = jet_forward(spec, params_s, x).spatial_lap
    lap_hat = jet_forward(spec, params_hat, b * x).spatial_lap
    lap_gap = rel_norm_error(lap_s, b * b * np.asarray(lap_hat))

    config = TrainConfig(
        problem=ProblemRef(name="poisson1d"),
        spec=MlpSpec(input_dim=1, hidden_layers=2, width=8),
        epochs=10, eval_every=5, interior_count=32, scale_b=1.0,
    )
    plain = train(config, seed)
    scaled = train_scaled(config, seed)
    bitwise = (
        np.array_equal(np.asarray(plain.best_params), np.asarray(scaled.best_params))
        and np.array_equal(np.asarray(plain.final_params), np.asarray(scaled.final_params))
        and plain.history == scaled.history
    )
    return [
        _check("scale-back value identity", value_gap, 1e-10),
        _check("scale-back Laplacian identity", lap_gap, 1e-8),
        _check("b = 1 pipeline is bitwise identical", 0.0 if bitwise else 1.0, 0.0),
    ]


def check_normalization(seed: int) -> List[CheckResult]:
    """With N = 0 and w1 from the data, the interior term equals 1"""
    results = []
    targets = [
        ("regression", make_regression_target(), lambda p, x: p.u(x)),
        ("poisson1d", make_poisson_1d(), lambda p, x: p.f(x)),
        ("poisson2d_n5", make_poisson_2d(5), lambda p, x: p.f(x)),
    ]
    for name, problem, field in targets:
        dim = problem.domain.dim
        spec, params = random_net("sin", dim, seed)
        params = zero_output(spec, params)
        x = jnp.asarray(latin_hypercube(problem.domain, 1000, seed).points)
        values = field(problem, x)
        w1 = weight_w1(values)
        if isinstance(problem, PoissonProblem):
            term = w1 * float(jnp.mean((values + jet_forward(spec, params, x).spatial_lap) ** 2))
        else:
            term = w1 * float(jnp.mean((values - forward(spec, params, x)) ** 2))
        results.append(_check(f"{name}: normalized interior term", abs(term - 1.0), 1e-12))
    return results


def check_dft() -> List[CheckResult]:
    """Discrete sinusoid and Parseval identities"""
    n = 1000
    j = np.arange(n)
    report = dft_amplitudes(np.sin(2.0 * math.pi * j / n))
    amps = np.asarray(report.amplitudes)
    leak = float(np.max(np.delete(amps, [1, n - 1])))
    peak = abs(amps[1] - n / 2)

    r = philox_generator(0, 9).normal(size=n)
    parseval = abs(float(np.sum(np.asarray(dft_amplitudes(r).amplitudes) ** 2)) / n - float(np.sum(r * r)))
    parseval /= float(np.sum(r * r))
    return [
        _check("DFT peak |F_1| = N/2", peak, 1e-9),
        _check("DFT leakage off the peak", leak, 1e-9),
        _check("Parseval identity", parseval, 1e-10),
    ]


def run_self_checks(seed: int = 0) -> List[CheckResult]:
    """Run every self-check and return the results in order"""
    return (
        check_derivatives(seed)
        + check_problems(seed)
        + check_scaling(seed)
        + check_normalization(seed)
        + check_dft()
    )
