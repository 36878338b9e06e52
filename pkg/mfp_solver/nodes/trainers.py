"""
Training nodes for the LangGraph workflow.

- train_primary: first stage (scaled when scale_b > 1)
- train_residual: residual correction on top of the first stage
"""

from typing import Any, Dict

from mfp_solver.exceptions import MfpError, TrainingDivergedError
from mfp_solver.training import residual_stage, train_scaled
from mfp_solver.utils.console import log_error


def _failure(e: MfpError, title: str) -> Dict[str, Any]:
    """Errors and details for a failed stage"""
    log_error(title, str(e))
    details: Dict[str, Any] = {}
    if isinstance(e, TrainingDivergedError):
        details = {"stage": e.stage, "epoch": e.epoch, "loss": e.loss}
    elif getattr(e, "param_index", None) is not None:
        details = {"param_index": e.param_index}
    return {
        "validation_errors": [str(e)],
        "error_codes": [e.error_code],
        "error_details": details,
    }


def train_primary(state: Dict[str, Any]) -> Dict[str, Any]:
    """
    Train the first-stage network.

    Waits for both samplers; does nothing when an earlier node failed.

    Returns:
        Update with 'primary' (RunResult), or validation errors.
    """
    if state.get("validation_errors"):
        return {}
    try:
        result = train_scaled(
            state["config"], state["seed"], state["problem"],
            state["interior"], state.get("boundary")
        )
        return {"primary": result}
    except MfpError as e:
        return _failure(e, "First-stage training failed")


def train_residual(state: Dict[str, Any]) -> Dict[str, Any]:
    """
    Train the residual correction network.

    The residual equation is formed from the first stage's final or
    best-loss parameters, per config.residual.source.

    Returns:
        Update with 'residual' (RunResult) and 'residual_base' parameters.
    """
    config = state["config"]
    primary = state["primary"]
    base = primary.final_params if config.residual.source == "final" else primary.best_params
    try:
        result = residual_stage(
            primary.spec, base, state["problem"], config, state["seed"],
            state["interior"], state["boundary"]
        )
        return {"residual": result, "residual_base": base}
    except MfpError as e:
        return _failure(e, "Residual training failed")
