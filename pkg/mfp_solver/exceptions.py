"""
Exception hierarchy for the solver.

Every error carries a machine-readable error_code that ends up in
RunFailure records and decides the CLI exit code.
"""

from typing import Optional


class MfpError(Exception):
    """Base class for solver errors."""

    error_code = "INTERNAL_ERROR"


class ConfigurationError(MfpError, ValueError):
    """Invalid configuration: dimension mismatch, bad counts, bad scaling factor."""

    error_code = "CONFIG_ERROR"


class MetricUndefinedError(MfpError, ValueError):
    """A metric or weight has a zero denominator or too few samples."""

    error_code = "METRIC_UNDEFINED"


class NumericalFailureError(MfpError, ArithmeticError):
    """
    Non-finite value in a loss, gradient or parameter update.

    Attributes:
        param_index: First parameter index with a non-finite gradient, if known.
    """

    error_code = "NUMERICAL_FAILURE"

    def __init__(self, message: str, param_index: Optional[int] = None):
        super().__init__(message)
        self.param_index = param_index


class TrainingDivergedError(NumericalFailureError):
    """
    Training loss became non-finite or exceeded the divergence threshold.

    Attributes:
        epoch: Epoch at which the loss was observed.
        loss: The offending loss value.
    """

    error_code = "DIVERGED"

    def __init__(self, epoch: int, loss: float, stage: str = "primary"):
        super().__init__(f"{stage} training diverged at epoch {epoch} (loss={loss!r})")
        self.epoch = epoch
        self.loss = loss
        self.stage = stage
