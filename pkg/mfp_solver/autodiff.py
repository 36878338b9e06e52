"""
Spatial derivatives of network outputs and parameter gradients of losses.

Spatial gradient and Laplacian are computed by second-order forward mode:
every layer carries the value together with its first and second derivative
with respect to each input coordinate. Parameter gradients are reverse mode
(jax.value_and_grad) taken through that jet computation, so losses containing
the Laplacian are differentiated exactly.
"""

import logging
from typing import Callable, NamedTuple, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from common.models import ActivationKind, MlpSpec
from mfp_solver.constants import SOFTPLUS_LINEAR_THRESHOLD
from mfp_solver.exceptions import ConfigurationError, NumericalFailureError

logger = logging.getLogger(__name__)


class Jet(NamedTuple):
    """
    Value, spatial gradient and Laplacian of a scalar field.

    For a batch of n points: value (n,), spatial_grad (n, d), spatial_lap (n,).
    For a single point: value (), spatial_grad (d,), spatial_lap ().
    """
    value: jax.Array
    spatial_grad: jax.Array
    spatial_lap: jax.Array


def softplus(z: jax.Array) -> jax.Array:
    """ln(1 + e^z), evaluated as z + ln(1 + e^-z) above the linear threshold"""
    low = jnp.log1p(jnp.exp(jnp.minimum(z, SOFTPLUS_LINEAR_THRESHOLD)))
    high = z + jnp.log1p(jnp.exp(-jnp.maximum(z, SOFTPLUS_LINEAR_THRESHOLD)))
    return jnp.where(z > SOFTPLUS_LINEAR_THRESHOLD, high, low)


def activation_jet(kind: ActivationKind, scale: float, z: jax.Array) -> Tuple[jax.Array, jax.Array, jax.Array]:
    """
    Activation value and its first two derivatives, elementwise.

    Args:
        kind: tanh, mish or sin.
        scale: Frequency a of sin(a*z); ignored for tanh and mish.
        z: Pre-activations.

    Returns:
        (sigma(z), sigma'(z), sigma''(z))
    """
    if kind == "sin":
        az = scale * z
        s = jnp.sin(az)
        return s, scale * jnp.cos(az), -(scale * scale) * s
    if kind == "tanh":
        t = jnp.tanh(z)
        sech2 = 1.0 - t * t
        return t, sech2, -2.0 * t * sech2
    if kind == "mish":
        t = jnp.tanh(softplus(z))
        sig = jax.nn.sigmoid(z)
        sech2 = 1.0 - t * t
        d1 = t + z * sech2 * sig
        d2 = sech2 * sig * (2.0 + z * (1.0 - sig) - 2.0 * z * t * sig)
        return z * t, d1, d2
    raise ConfigurationError(f"Unknown activation kind: {kind!r}")


def as_batch(spec: MlpSpec, x: jax.Array) -> Tuple[jax.Array, bool]:
    """Promote a single point (d,) to a batch (1, d) and check the dimension"""
    x = jnp.asarray(x, dtype=jnp.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ConfigurationError(
            f"Input of shape {tuple(x.shape)} does not match network input_dim={spec.input_dim}"
        )
    return x, single


def jet_forward(spec: MlpSpec, params: jax.Array, x: jax.Array) -> Jet:
    """
    Evaluate the network with its spatial gradient and Laplacian.

    All d coordinate directions are carried side by side: da[:, k, :] holds
    the derivative of the layer output with respect to x_k, dda the pure
    second derivative. Mixed partials are never formed.

    Args:
        spec: Network architecture.
        params: Flat parameter vector (see network.unflatten for the layout).
        x: A point (d,) or a batch of points (n, d).

    Returns:
        Jet: value, spatial gradient, Laplacian.

    Raises:
        ConfigurationError: If the input dimension does not match the network.
    """
    from mfp_solver.network import unflatten

    x, single = as_batch(spec, x)
    n, d = x.shape
    layers = unflatten(spec, params)
    act = spec.activation

    a = x
    da = jnp.broadcast_to(jnp.eye(d, dtype=x.dtype), (n, d, d))
    dda = jnp.zeros((n, d, d), dtype=x.dtype)
    for weight, bias in layers[:-1]:
        z = a @ weight.T + bias
        dz = da @ weight.T
        ddz = dda @ weight.T
        s0, s1, s2 = activation_jet(act.kind, act.scale, z)
        a = s0
        da = s1[:, None, :] * dz
        dda = s2[:, None, :] * dz * dz + s1[:, None, :] * ddz

    weight, bias = layers[-1]
    value = (a @ weight.T + bias)[:, 0]
    grad = (da @ weight.T)[:, :, 0]
    lap = jnp.sum((dda @ weight.T)[:, :, 0], axis=1)
    if single:
        return Jet(value[0], grad[0], lap[0])
    return Jet(value, grad, lap)


def loss_and_param_gradient(
    loss: Callable[[jax.Array], jax.Array],
    params: jax.Array
) -> Tuple[float, jax.Array]:
    """
    Loss value and its gradient with respect to the flat parameter vector.

    Args:
        loss: Scalar function of params; may contain jet_forward Laplacians.
        params: Flat parameter vector.

    Returns:
        (loss value, gradient with the layout of params)

    Raises:
        NumericalFailureError: If the loss or any gradient entry is not finite.
    """
    value, grad = jax.value_and_grad(loss)(params)
    if not np.isfinite(float(value)):
        raise NumericalFailureError(f"Loss evaluated to {float(value)!r}")
    bad = np.flatnonzero(~np.isfinite(np.asarray(grad)))
    if bad.size:
        logger.debug("Non-finite gradient entries: %d", bad.size)
        raise NumericalFailureError(
            f"Non-finite gradient at parameter index {int(bad[0])}",
            param_index=int(bad[0])
        )
    return float(value), grad


def loss_param_gradient(loss: Callable[[jax.Array], jax.Array], params: jax.Array) -> jax.Array:
    """Gradient of loss with respect to params (see loss_and_param_gradient)"""
    return loss_and_param_gradient(loss, params)[1]
