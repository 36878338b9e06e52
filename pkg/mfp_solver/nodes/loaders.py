"""
Loading nodes for the LangGraph workflow.

- Problem construction from the config's problem reference
- Parallel sampling of the training sets and the uniform test grid
"""

from typing import Any, Dict

from mfp_solver.exceptions import MfpError
from mfp_solver.problems import PoissonProblem, build_problem
from mfp_solver.sampling import training_sets, uniform_grid
from mfp_solver.utils.console import log_error


def load_problem(state: Dict[str, Any]) -> Dict[str, Any]:
    """
    Build the built-in problem named by the config.

    Args:
        state: Workflow state containing 'config'.

    Returns:
        Update with 'problem', or validation errors.
    """
    try:
        return {"problem": build_problem(state["config"].problem)}
    except MfpError as e:
        log_error("Problem construction failed", str(e))
        return {"validation_errors": [str(e)], "error_codes": [e.error_code]}


def sample_training(state: Dict[str, Any]) -> Dict[str, Any]:
    """
    Sample the interior and boundary training sets of the run's seed.

    Runs in parallel with sample_test; returns only its own keys.
    """
    problem = state["problem"]
    try:
        interior, boundary = training_sets(
            problem.domain, state["config"], state["seed"],
            with_boundary=isinstance(problem, PoissonProblem)
        )
        return {"interior": interior, "boundary": boundary}
    except MfpError as e:
        log_error("Training set sampling failed", str(e))
        return {"validation_errors": [str(e)], "error_codes": [e.error_code]}


def sample_test(state: Dict[str, Any]) -> Dict[str, Any]:
    """
    Build the uniform test grid X~.

    Runs in parallel with sample_training; returns only its own keys.
    """
    try:
        return {"test_points": uniform_grid(state["problem"].domain, state["config"].test_grid_count)}
    except MfpError as e:
        log_error("Test grid construction failed", str(e))
        return {"validation_errors": [str(e)], "error_codes": [e.error_code]}
