"""
LangGraph workflow for one seed-run.

Defines the state machine that carries a run from configuration to record:
1. Configuration validation
2. Problem construction
3. Parallel sampling (training sets, test grid)
4. First-stage training (scaled when scale_b > 1)
5. Optional residual correction
6. Evaluation at the best-loss parameters
7. Result formatting
"""

import operator
from typing import Annotated, Any, Dict, List, Optional, TypedDict

from langgraph.graph import END, StateGraph

from common.models import ErrorReport, RunFailure, RunSummary, TrainConfig
from mfp_solver.nodes.evaluators import evaluate
from mfp_solver.nodes.formatters import format_error, format_success
from mfp_solver.nodes.loaders import load_problem, sample_test, sample_training
from mfp_solver.nodes.trainers import train_primary, train_residual
from mfp_solver.nodes.validators import validate_config
from mfp_solver.problems import Problem
from mfp_solver.sampling import PointSet
from mfp_solver.training import RunResult


def start_sampling(state: Dict[str, Any]) -> Dict[str, Any]:
    """
    Pass-through node fanning out to the parallel samplers.

    Conditional edges cannot route directly to several parallel nodes.
    """
    return {}


class PipelineState(TypedDict, total=False):
    """
    State of the seed-run workflow.

    Contains all data flowing through the workflow nodes.
    """
    # Input
    config: TrainConfig
    seed: int
    label: str
    variant: str
    started_at: float

    # Problem and point sets
    problem: Problem
    interior: PointSet
    boundary: Optional[PointSet]
    test_points: PointSet

    # Training
    primary: RunResult
    residual: Optional[RunResult]
    residual_base: Any  # first-stage parameters the residual equation was formed from

    # Evaluation
    train_report: ErrorReport
    test_report: ErrorReport

    # Errors (operator.add merges lists from parallel nodes)
    validation_errors: Annotated[List[str], operator.add]
    error_codes: Annotated[List[str], operator.add]
    error_details: Dict[str, Any]

    # Output
    final_response: Optional[RunSummary | RunFailure]


def _ok_or_error(next_node: str):
    """Router: next_node when no errors were recorded, 'error' otherwise"""

    def route(state: PipelineState) -> str:
        return "error" if state.get("validation_errors") else next_node

    return route


def should_run_residual(state: PipelineState) -> str:
    """
    Conditional routing after first-stage training.

    Returns:
        "error" on failure, "residual" when the config has a residual stage,
        "evaluate" otherwise.
    """
    if state.get("validation_errors"):
        return "error"
    if state["config"].residual is not None:
        return "residual"
    return "evaluate"


def create_workflow() -> StateGraph:
    """
    Create and compile the LangGraph workflow.

    Workflow structure:
        START
          ↓
        validate_config
          ↓ [conditional: valid?]
          ├─ error → format_error → END
          └─ load_problem
               ↓ [conditional: built?]
               ├─ error → format_error → END
               └─ start_sampling
                 ┌──────────┴──────────┐
                 ↓                     ↓
          sample_training        sample_test
                 └──────────┬──────────┘
                            ↓
                      train_primary
                            ↓ [conditional]
                            ├─ error → format_error → END
                            ├─ residual → train_residual ─┐
                            └─ evaluate ←─────────────────┘
                                   ↓ [conditional]
                                   ├─ success → format_success → END
                                   └─ error → format_error → END

    Returns:
        Compiled StateGraph ready for execution.
    """
    workflow = StateGraph(PipelineState)

    workflow.add_node("validate_config", validate_config)
    workflow.add_node("load_problem", load_problem)
    workflow.add_node("start_sampling", start_sampling)
    workflow.add_node("sample_training", sample_training)
    workflow.add_node("sample_test", sample_test)
    workflow.add_node("train_primary", train_primary)
    workflow.add_node("train_residual", train_residual)
    workflow.add_node("evaluate", evaluate)
    workflow.add_node("format_success", format_success)
    workflow.add_node("format_error", format_error)

    workflow.set_entry_point("validate_config")

    workflow.add_conditional_edges(
        "validate_config",
        _ok_or_error("load"),
        {"load": "load_problem", "error": "format_error"}
    )
    workflow.add_conditional_edges(
        "load_problem",
        _ok_or_error("sample"),
        {"sample": "start_sampling", "error": "format_error"}
    )

    # Both samplers join at train_primary
    workflow.add_edge("start_sampling", "sample_training")
    workflow.add_edge("start_sampling", "sample_test")
    workflow.add_edge("sample_training", "train_primary")
    workflow.add_edge("sample_test", "train_primary")

    workflow.add_conditional_edges(
        "train_primary",
        should_run_residual,
        {"residual": "train_residual", "evaluate": "evaluate", "error": "format_error"}
    )
    workflow.add_conditional_edges(
        "train_residual",
        _ok_or_error("evaluate"),
        {"evaluate": "evaluate", "error": "format_error"}
    )
    workflow.add_conditional_edges(
        "evaluate",
        _ok_or_error("success"),
        {"success": "format_success", "error": "format_error"}
    )

    workflow.add_edge("format_success", END)
    workflow.add_edge("format_error", END)

    return workflow.compile()


# Global compiled workflow instance
_compiled_workflow: Optional[StateGraph] = None


def get_workflow() -> StateGraph:
    """
    Get or create the compiled workflow instance.

    Returns:
        Compiled StateGraph ready for execution.
    """
    global _compiled_workflow
    if _compiled_workflow is None:
        _compiled_workflow = create_workflow()
    return _compiled_workflow
