"""
Evaluation node for the LangGraph workflow.

Errors are reported at the best-loss parameters on the training set X and
on the uniform test grid X~, in the original domain.
"""

from typing import Any, Dict

from mfp_solver.exceptions import MfpError
from mfp_solver.training import error_report
from mfp_solver.utils.console import log_error


def evaluate(state: Dict[str, Any]) -> Dict[str, Any]:
    """
    Compute train and test ErrorReports.

    The first-stage errors use its best-loss parameters. The composite
    errors use the parameters the residual equation was formed from, plus
    the residual network's best-loss parameters.

    Returns:
        Update with 'train_report' and 'test_report'.
    """
    problem = state["problem"]
    primary = state["primary"]
    residual = state.get("residual")
    try:
        reports = {}
        for dataset, points in (("train", state["interior"].points), ("test", state["test_points"].points)):
            first = error_report(problem, (primary.spec, primary.best_params), None, points, dataset)
            if residual is not None:
                composite = error_report(
                    problem, (primary.spec, state["residual_base"]),
                    (residual.spec, residual.best_params), points, dataset
                )
                first = first.model_copy(update={
                    "eps_u_r": composite.eps_u_r,
                    "eps_f_r": composite.eps_f_r,
                })
            reports[f"{dataset}_report"] = first
        return reports
    except MfpError as e:
        log_error("Evaluation failed", str(e))
        return {"validation_errors": [str(e)], "error_codes": [e.error_code]}
