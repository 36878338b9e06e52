"""
Result formatting nodes for the LangGraph workflow.

Creates the final record of one seed-run:
- Success record (RunSummary)
- Failure record (RunFailure)
"""

import hashlib
import time
from typing import Any, Dict

from common.models import RunFailure, RunSummary
from mfp_solver.utils.formatters import canonical_json


def config_hash(config) -> str:
    """sha256 of the canonical TrainConfig JSON"""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def format_success(state: Dict[str, Any]) -> Dict[str, Any]:
    """
    Format a successful run.

    Args:
        state: Workflow state containing config, stage results and reports.

    Returns:
        Update with 'final_response' as RunSummary.
    """
    primary = state["primary"]
    residual = state.get("residual")
    summary = RunSummary(
        config_hash=config_hash(state["config"]),
        label=state.get("label", ""),
        variant=state.get("variant", ""),
        seed=state["seed"],
        primary=primary.summary(),
        residual=residual.summary() if residual is not None else None,
        train=state["train_report"],
        test=state["test_report"],
        wall_time=time.perf_counter() - state["started_at"],
    )
    return {"final_response": summary}


def format_error(state: Dict[str, Any]) -> Dict[str, Any]:
    """
    Format a failed run.

    The error code of the first failure decides the record's error_code.

    Args:
        state: Workflow state containing validation_errors and error_codes.

    Returns:
        Update with 'final_response' as RunFailure.
    """
    errors = state.get("validation_errors", [])
    codes = state.get("error_codes", [])
    error_code = codes[0] if codes else "INTERNAL_ERROR"
    first_error = errors[0] if errors else "Unknown error"

    details: Dict[str, Any] = {"validation_errors": errors}
    if state.get("error_details"):
        details.update(state["error_details"])

    failure = RunFailure(
        label=state.get("label", ""),
        variant=state.get("variant", ""),
        seed=state.get("seed", 0),
        error=first_error,
        error_code=error_code,
        details=details,
    )
    return {"final_response": failure}
