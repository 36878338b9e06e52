"""
Checkpoint files.

Format: one JSON header line (CheckpointHeader) terminated by a newline,
followed by the flat parameter vector as little-endian 64-bit floats in the
layout of network.unflatten.
"""

import logging
from pathlib import Path
from typing import Tuple, Union

import jax
import jax.numpy as jnp
import numpy as np
from pydantic import ValidationError

from common.models import CheckpointHeader
from mfp_solver.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

_PARAM_DTYPE = np.dtype("<f8")


def save_checkpoint(path: Union[str, Path], header: CheckpointHeader, params: jax.Array) -> Path:
    """
    Write header and parameters to path.

    Raises:
        ConfigurationError: If the parameter count does not match header.spec.
    """
    values = np.asarray(params, dtype=_PARAM_DTYPE)
    if values.shape != (header.spec.param_count,):
        raise ConfigurationError(
            f"Checkpoint holds {values.size} parameters, spec needs {header.spec.param_count}"
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(header.model_dump_json().encode("utf-8"))
        f.write(b"\n")
        f.write(values.tobytes())
    logger.debug("Saved checkpoint %s (epoch %d)", path, header.epoch)
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[CheckpointHeader, jax.Array]:
    """
    Read a checkpoint written by save_checkpoint.

    Returns:
        (header, flat float64 parameters)

    Raises:
        ConfigurationError: If the file is missing, the header is invalid or
            the payload length does not match the header's spec.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Checkpoint not found: {path}")
    raw = path.read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise ConfigurationError(f"Checkpoint {path} has no header line")
    try:
        header = CheckpointHeader.model_validate_json(raw[:newline])
    except ValidationError as e:
        raise ConfigurationError(f"Invalid checkpoint header in {path}: {e}") from e
    payload = raw[newline + 1:]
    expected = header.spec.param_count * _PARAM_DTYPE.itemsize
    if len(payload) != expected:
        raise ConfigurationError(
            f"Checkpoint {path} payload has {len(payload)} bytes, expected {expected}"
        )
    params = np.frombuffer(payload, dtype=_PARAM_DTYPE)
    return header, jnp.asarray(params, dtype=jnp.float64)
