"""
Built-in target models, the Poisson problem and the domain-scaling transform.

Every field is a callable on a batch of points (n, d) returning (n,) values.
Right-hand sides are written in closed form, not obtained by differentiating
the exact solutions.
"""

import math
from typing import Any, Callable, Optional, Union

import jax
import jax.numpy as jnp
from pydantic import BaseModel, ConfigDict, Field, model_validator

from common.models import Box, MlpSpec, ProblemRef
from mfp_solver.autodiff import jet_forward
from mfp_solver.exceptions import ConfigurationError
from mfp_solver.network import forward

ScalarField = Callable[[jax.Array], jax.Array]

# (amplitude, k) of the terms a*sin(k*pi*x) in the 1D Poisson solution
POISSON_1D_TERMS = ((5.0, 1), (1.0, 8), (0.5, 16), (0.25, 32), (0.125, 64))


class PoissonProblem(BaseModel):
    """
    -lap u = f in the box, u = g on its boundary.

    Attributes:
        name: Label used in logs and checkpoint headers
        dim: Spatial dimension
        domain: Box domain
        f: Right-hand side
        g: Dirichlet boundary data
        exact_u: Exact solution, if known
        scale_b: Scaling factor the problem was built with (1 = original domain)
    """
    name: str
    dim: int = Field(..., ge=1, le=2)
    domain: Box
    f: ScalarField
    g: ScalarField
    exact_u: Optional[ScalarField] = None
    scale_b: float = Field(default=1.0, ge=1.0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_domain(self) -> "PoissonProblem":
        if self.domain.dim != self.dim:
            raise ValueError(f"Domain of dimension {self.domain.dim} for a {self.dim}D problem")
        return self


class RegressionTarget(BaseModel):
    """
    Function to fit by least squares.

    Attributes:
        name: Label
        domain: Interval
        u: Target field
        scale_b: Scaling factor the target was built with
    """
    name: str
    domain: Box
    u: ScalarField
    scale_b: float = Field(default=1.0, ge=1.0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def dim(self) -> int:
        return self.domain.dim


Problem = Union[PoissonProblem, RegressionTarget]


def make_regression_target() -> RegressionTarget:
    """u(x) = sin(2 pi x)/2 + sin(50 pi x)/2 on [-1, 1]"""

    def u(x: jax.Array) -> jax.Array:
        x = x[:, 0]
        return 0.5 * jnp.sin(2.0 * math.pi * x) + 0.5 * jnp.sin(50.0 * math.pi * x)

    return RegressionTarget(name="regression", domain=Box(lo=(-1.0,), hi=(1.0,)), u=u)


def make_poisson_1d() -> PoissonProblem:
    """
    Five-frequency 1D Poisson problem on (-1, 1).

    u(x) = sum a_k sin(k pi x), f = sum a_k (k pi)^2 sin(k pi x), g = u.
    """

    def u(x: jax.Array) -> jax.Array:
        x = x[:, 0]
        return sum(a * jnp.sin(k * math.pi * x) for a, k in POISSON_1D_TERMS)

    def f(x: jax.Array) -> jax.Array:
        x = x[:, 0]
        return sum(a * (k * math.pi) ** 2 * jnp.sin(k * math.pi * x) for a, k in POISSON_1D_TERMS)

    return PoissonProblem(
        name="poisson1d", dim=1, domain=Box(lo=(-1.0,), hi=(1.0,)), f=f, g=u, exact_u=u
    )


def make_poisson_2d(n: int) -> PoissonProblem:
    """
    Multi-frequency 2D Poisson problem on (0, 1)^2 with n terms.

    u = sum_i (1/i) sin(2^i pi x) sin(2^i pi y), g = 0.

    Raises:
        ConfigurationError: If n < 1.
    """
    if n < 1:
        raise ConfigurationError(f"poisson2d needs n >= 1, got {n}")
    freqs = [(i, (2 ** i) * math.pi) for i in range(1, n + 1)]

    def u(x: jax.Array) -> jax.Array:
        return sum(jnp.sin(w * x[:, 0]) * jnp.sin(w * x[:, 1]) / i for i, w in freqs)

    def f(x: jax.Array) -> jax.Array:
        return sum(
            (2.0 / i) * w * w * jnp.sin(w * x[:, 0]) * jnp.sin(w * x[:, 1]) for i, w in freqs
        )

    def g(x: jax.Array) -> jax.Array:
        return jnp.zeros(x.shape[0], dtype=jnp.float64)

    return PoissonProblem(
        name=f"poisson2d_n{n}", dim=2, domain=Box(lo=(0.0, 0.0), hi=(1.0, 1.0)),
        f=f, g=g, exact_u=u
    )


def build_problem(ref: ProblemRef) -> Problem:
    """Construct the built-in problem named by a run config"""
    if ref.name == "regression":
        return make_regression_target()
    if ref.name == "poisson1d":
        return make_poisson_1d()
    return make_poisson_2d(ref.n)


def scale_problem(problem: Problem, b: float) -> Problem:
    """
    Map a problem to the domain scaled by b.

    Poisson: f^(x^) = f(x^/b)/b^2, g^(x^) = g(x^/b), u^(x^) = u(x^/b).
    Regression: u^(x^) = u(x^/b). b = 1 returns the problem itself.

    Raises:
        ConfigurationError: If b < 1 or the problem is already scaled.
    """
    if not b >= 1.0:
        raise ConfigurationError(f"Scaling factor must be >= 1, got {b!r}")
    if b == 1.0:
        return problem
    if problem.scale_b != 1.0:
        raise ConfigurationError(f"Problem {problem.name} is already scaled (b={problem.scale_b!r})")
    domain = problem.domain.scaled(b)

    def unscale(field: ScalarField, factor: float = 1.0) -> ScalarField:
        def scaled(x: jax.Array) -> jax.Array:
            return field(x / b) * factor
        return scaled

    if isinstance(problem, RegressionTarget):
        return problem.model_copy(update={"domain": domain, "u": unscale(problem.u), "scale_b": b})
    update: dict[str, Any] = {
        "domain": domain,
        "f": unscale(problem.f, 1.0 / (b * b)),
        "g": unscale(problem.g),
        "exact_u": unscale(problem.exact_u) if problem.exact_u is not None else None,
        "scale_b": b,
    }
    return problem.model_copy(update=update)


def scale_back_materialize(spec: MlpSpec, params_hat: jax.Array, b: float) -> jax.Array:
    """
    Parameters theta_s with N(x; theta_s) = N^(b x; theta^).

    The first-layer weight matrix is multiplied by b; everything else is copied.
    """
    if b == 1.0:
        return params_hat
    first = spec.width * spec.input_dim
    return params_hat.at[:first].multiply(b)


def make_residual_problem(problem: PoissonProblem, spec: MlpSpec, params: jax.Array) -> PoissonProblem:
    """
    Residual equation of an approximate solution N = N(.; params).

    -lap w = f + lap N in the domain, w = g - N on the boundary; exact
    solution u - N when u is known.

    Raises:
        ConfigurationError: For regression targets, scaled problems or a
            network of the wrong input dimension.
    """
    if not isinstance(problem, PoissonProblem):
        raise ConfigurationError("Residual correction needs a Poisson problem")
    if problem.scale_b != 1.0:
        raise ConfigurationError("Residual equation is formed in the original domain")
    if spec.input_dim != problem.dim:
        raise ConfigurationError(
            f"Network input_dim={spec.input_dim} does not match problem dimension {problem.dim}"
        )

    def f_r(x: jax.Array) -> jax.Array:
        return problem.f(x) + jet_forward(spec, params, x).spatial_lap

    def g_r(x: jax.Array) -> jax.Array:
        return problem.g(x) - forward(spec, params, x)

    exact_r = None
    if problem.exact_u is not None:
        def exact_r(x: jax.Array) -> jax.Array:
            return problem.exact_u(x) - forward(spec, params, x)

    return PoissonProblem(
        name=f"{problem.name}_residual", dim=problem.dim, domain=problem.domain,
        f=f_r, g=g_r, exact_u=exact_r
    )
