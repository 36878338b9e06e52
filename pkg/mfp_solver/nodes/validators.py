"""
Validation node for the LangGraph workflow.

Checks a run configuration against the sampling rules of its problem
before any work is done.
"""

import math
import time
from typing import Any, Dict, List

from pydantic import ValidationError

from common.models import TrainConfig
from mfp_solver.exceptions import ConfigurationError
from mfp_solver.utils.console import log_error


def config_problems(config: TrainConfig, seed: int) -> List[str]:
    """
    Sampling-rule violations of a config for one seed.

    Returns:
        Human-readable messages, empty when the config is usable.
    """
    errors = []
    dim = config.problem.dim
    is_pde = config.problem.name != "regression"

    if is_pde and dim == 1 and config.boundary_count != 2:
        errors.append(f"1D boundary has exactly 2 points, boundary_count={config.boundary_count}")
    if is_pde and dim == 2 and (config.boundary_count <= 0 or config.boundary_count % 4):
        errors.append(
            f"2D boundary_count must be a positive multiple of 4, got {config.boundary_count}"
        )
    if dim == 2 and math.isqrt(config.test_grid_count) ** 2 != config.test_grid_count:
        errors.append(f"2D test_grid_count must be a perfect square, got {config.test_grid_count}")
    if dim == 2 and seed == config.uniform_seed and math.isqrt(config.interior_count) ** 2 != config.interior_count:
        errors.append(
            f"Uniform 2D training grid needs a perfect-square interior_count, got {config.interior_count}"
        )
    if seed == config.uniform_seed and config.interior_count < 2:
        errors.append("Uniform training grid needs at least 2 points")
    if config.residual is not None and config.residual.spec.input_dim != dim:
        errors.append("Residual network input_dim does not match the problem dimension")
    return errors


def validate_config(state: Dict[str, Any]) -> Dict[str, Any]:
    """
    Validate the run configuration.

    LangGraph node that accepts a TrainConfig or its dict form and checks
    the per-problem sampling rules.

    Args:
        state: Workflow state containing 'config' and 'seed'.

    Returns:
        Update with the parsed 'config', 'started_at', and validation errors if any.
    """
    started_at = time.perf_counter()
    raw = state.get("config")
    seed = state.get("seed", 0)
    try:
        config = raw if isinstance(raw, TrainConfig) else TrainConfig.model_validate(raw)
    except ValidationError as e:
        message = f"Invalid run configuration: {e}"
        log_error("Configuration error", str(e))
        return {
            "started_at": started_at,
            "validation_errors": [message],
            "error_codes": [ConfigurationError.error_code],
        }

    errors = config_problems(config, seed)
    if errors:
        log_error("Configuration error", "\n".join(errors))

    return {
        "config": config,
        "started_at": started_at,
        "validation_errors": errors,
        "error_codes": [ConfigurationError.error_code] * len(errors),
    }
