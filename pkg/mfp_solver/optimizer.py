"""
Adam optimizer.

The moment update is optax.scale_by_adam; the learning-rate step is applied
here so the state stays a plain named tuple of arrays and hyperparameters.
"""

from typing import NamedTuple, Tuple

import jax
import jax.numpy as jnp
import numpy as np
import optax

from mfp_solver.constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPS, DEFAULT_LEARNING_RATE
from mfp_solver.exceptions import ConfigurationError, NumericalFailureError


class AdamState(NamedTuple):
    """
    Adam moments, step count and hyperparameters.

    Attributes:
        m: First moment, same length as the parameters
        v: Second moment (entrywise >= 0)
        t: Number of steps taken
        lr: Learning rate
        beta1, beta2, eps: Adam constants
    """
    m: jax.Array
    v: jax.Array
    t: int
    lr: float = DEFAULT_LEARNING_RATE
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS


def adam_init(
    params: jax.Array,
    lr: float = DEFAULT_LEARNING_RATE,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS
) -> AdamState:
    """Zero moments at step 0"""
    zeros = jnp.zeros_like(params)
    return AdamState(m=zeros, v=zeros, t=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_update(
    params: jax.Array,
    grad: jax.Array,
    m: jax.Array,
    v: jax.Array,
    t: jax.Array,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float
) -> Tuple[jax.Array, jax.Array, jax.Array, jax.Array]:
    """
    One bias-corrected Adam update, traceable under jax.jit.

    Returns:
        (new params, new m, new v, new t)
    """
    transform = optax.scale_by_adam(b1=beta1, b2=beta2, eps=eps)
    inner = optax.ScaleByAdamState(count=jnp.asarray(t, dtype=jnp.int32), mu=m, nu=v)
    direction, inner = transform.update(grad, inner)
    return params - lr * direction, inner.mu, inner.nu, inner.count


def adam_step(state: AdamState, params: jax.Array, grad: jax.Array) -> Tuple[AdamState, jax.Array]:
    """
    Apply one Adam step.

    Raises:
        ConfigurationError: If params, grad and moments differ in shape.
        NumericalFailureError: If the gradient has a non-finite entry.
    """
    if not (params.shape == grad.shape == state.m.shape == state.v.shape):
        raise ConfigurationError(
            f"Shape mismatch: params {params.shape}, grad {grad.shape}, moments {state.m.shape}"
        )
    bad = np.flatnonzero(~np.isfinite(np.asarray(grad)))
    if bad.size:
        raise NumericalFailureError(
            f"Non-finite gradient at parameter index {int(bad[0])}",
            param_index=int(bad[0])
        )
    new_params, m, v, t = adam_update(
        params, grad, state.m, state.v, state.t,
        state.lr, state.beta1, state.beta2, state.eps
    )
    return state._replace(m=m, v=v, t=int(t)), new_params
