"""
Fully connected network: parameter layout, initialization and evaluation.

Flat parameter layout, input layer first: for each affine layer the weight
matrix (fan_out, fan_in) in row-major order followed by its fan_out biases.
Hidden layers apply the configured activation; the readout is linear.
"""

from typing import List, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from common.models import MlpSpec
from mfp_solver.autodiff import as_batch, activation_jet
from mfp_solver.constants import INITIAL_BIAS, STREAM_INIT
from mfp_solver.exceptions import ConfigurationError
from mfp_solver.sampling import philox_generator


def param_count(spec: MlpSpec) -> int:
    """Total number of weights and biases"""
    return spec.param_count


def unflatten(spec: MlpSpec, params: jax.Array) -> List[Tuple[jax.Array, jax.Array]]:
    """
    Split a flat parameter vector into (weight, bias) pairs per layer.

    Raises:
        ConfigurationError: If the vector length does not match spec.param_count.
    """
    if params.shape != (spec.param_count,):
        raise ConfigurationError(
            f"Parameter vector of shape {tuple(params.shape)} does not match "
            f"{spec.param_count} parameters of the network"
        )
    layers = []
    offset = 0
    for fan_out, fan_in in spec.layer_shapes:
        size = fan_out * fan_in
        weight = params[offset:offset + size].reshape(fan_out, fan_in)
        offset += size
        bias = params[offset:offset + fan_out]
        offset += fan_out
        layers.append((weight, bias))
    return layers


def init_xavier_normal(spec: MlpSpec, seed: int) -> jax.Array:
    """
    Xavier-normal weights, every bias set to INITIAL_BIAS.

    Weights are drawn from Normal(0, 2 / (fan_in + fan_out)) with a Philox
    generator keyed by (seed, STREAM_INIT), layer by layer in layout order.

    Args:
        spec: Network architecture.
        seed: Init stream seed.

    Returns:
        Flat float64 parameter vector.
    """
    rng = philox_generator(seed, STREAM_INIT)
    chunks = []
    for fan_out, fan_in in spec.layer_shapes:
        std = np.sqrt(2.0 / (fan_in + fan_out))
        chunks.append(rng.normal(0.0, std, size=fan_out * fan_in))
        chunks.append(np.full(fan_out, INITIAL_BIAS))
    return jnp.asarray(np.concatenate(chunks), dtype=jnp.float64)


def forward(spec: MlpSpec, params: jax.Array, x: jax.Array) -> jax.Array:
    """
    Plain network evaluation.

    Args:
        spec: Network architecture.
        params: Flat parameter vector.
        x: A point (d,) or a batch of points (n, d).

    Returns:
        Scalar for a single point, (n,) for a batch.
    """
    x, single = as_batch(spec, x)
    layers = unflatten(spec, params)
    act = spec.activation
    a = x
    for weight, bias in layers[:-1]:
        a = activation_jet(act.kind, act.scale, a @ weight.T + bias)[0]
    weight, bias = layers[-1]
    out = (a @ weight.T + bias)[:, 0]
    return out[0] if single else out
