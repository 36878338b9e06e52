"""
Common package for data models shared by the solver library and the experiment runner.
"""

from .models import (
    Box,
    ActivationSpec,
    MlpSpec,
    ProblemRef,
    ResidualConfig,
    TrainConfig,
    Variant,
    ExperimentConfig,
    ErrorReport,
    HistoryRow,
    StageSummary,
    RunSummary,
    RunFailure,
    CheckpointHeader,
    SpectrumReport,
    parse_scale,
)

__all__ = [
    'Box',
    'ActivationSpec',
    'MlpSpec',
    'ProblemRef',
    'ResidualConfig',
    'TrainConfig',
    'Variant',
    'ExperimentConfig',
    'ErrorReport',
    'HistoryRow',
    'StageSummary',
    'RunSummary',
    'RunFailure',
    'CheckpointHeader',
    'SpectrumReport',
    'parse_scale',
]
