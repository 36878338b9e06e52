"""
Pydantic models for run configuration, results and artifacts.

These models are shared between:
- The solver library (mfp_solver/)
- The experiment runner and CLI (mfp_solver/experiment.py, mfp_solver/main.py)

File formats: docs/formats.md
"""

import math
import re
from typing import Literal, Optional, Any

from pydantic import BaseModel, Field, field_validator, model_validator, ConfigDict


ActivationKind = Literal["tanh", "mish", "sin"]
ProblemName = Literal["regression", "poisson1d", "poisson2d"]

_PI_EXPR = re.compile(r"^\s*(?P<coef>[0-9]*\.?[0-9]*(?:[eE][-+]?[0-9]+)?)\s*\*?\s*pi\s*$")


def parse_scale(value: Any) -> float:
    """
    Parse a scaling factor given as a number or as a multiple of pi.

    Accepts 16, 16.0, "16", "pi", "16pi", "16*pi", "2.5 * pi".

    Raises:
        ValueError: If the string cannot be parsed.
    """
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower().replace("π", "pi")
        match = _PI_EXPR.match(text)
        if match:
            coef = match.group("coef")
            return (float(coef) if coef else 1.0) * math.pi
        return float(text)
    raise ValueError(f"Cannot interpret scaling factor: {value!r}")


class Box(BaseModel):
    """
    Axis-aligned box domain [lo_1, hi_1] x ... x [lo_d, hi_d].

    Attributes:
        lo: Lower corner, one entry per axis
        hi: Upper corner, one entry per axis
    """
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_bounds(self) -> "Box":
        """Validate matching lengths and lo < hi per axis"""
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("Box corners must have the same, nonzero length")
        for lo, hi in zip(self.lo, self.hi):
            if not lo < hi:
                raise ValueError(f"Box requires lo < hi per axis, got [{lo}, {hi}]")
        return self

    @property
    def dim(self) -> int:
        return len(self.lo)

    def scaled(self, b: float) -> "Box":
        """Box mapped by x -> b*x"""
        return Box(lo=tuple(b * v for v in self.lo), hi=tuple(b * v for v in self.hi))


class ActivationSpec(BaseModel):
    """
    Hidden-layer activation.

    Attributes:
        kind: tanh, mish or sin
        scale: Frequency a of sin(a*z); ignored for tanh and mish
    """
    kind: ActivationKind = "sin"
    scale: float = Field(default=1.0, gt=0.0)

    model_config = ConfigDict(frozen=True)

    @property
    def label(self) -> str:
        if self.kind != "sin":
            return self.kind
        return "sin(x)" if self.scale == 1.0 else f"sin({self.scale:g}x)"


class MlpSpec(BaseModel):
    """
    Fully connected network architecture.

    Attributes:
        input_dim: Spatial dimension (1 or 2)
        hidden_layers: Number of hidden layers L
        width: Neurons per hidden layer N
        activation: Hidden activation; the readout layer is linear
        output_dim: Always 1
    """
    input_dim: int = Field(..., ge=1, le=2)
    hidden_layers: int = Field(default=4, ge=1)
    width: int = Field(default=20, ge=1)
    activation: ActivationSpec = Field(default_factory=ActivationSpec)
    output_dim: Literal[1] = 1

    model_config = ConfigDict(frozen=True)

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        """(fan_out, fan_in) per affine layer, input to readout"""
        shapes = [(self.width, self.input_dim)]
        shapes += [(self.width, self.width)] * (self.hidden_layers - 1)
        shapes.append((self.output_dim, self.width))
        return shapes

    @property
    def param_count(self) -> int:
        return sum(fan_out * fan_in + fan_out for fan_out, fan_in in self.layer_shapes)


class ProblemRef(BaseModel):
    """
    Built-in problem selected by name.

    Attributes:
        name: regression, poisson1d or poisson2d
        n: Number of frequency terms for poisson2d
    """
    name: ProblemName
    n: Optional[int] = Field(default=None, ge=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_n(self) -> "ProblemRef":
        """poisson2d needs n; the 1D problems take none"""
        if self.name == "poisson2d" and self.n is None:
            raise ValueError("poisson2d requires parameter n")
        if self.name != "poisson2d" and self.n is not None:
            raise ValueError(f"Problem {self.name} takes no parameter n")
        return self

    @property
    def dim(self) -> int:
        return 2 if self.name == "poisson2d" else 1

    @property
    def label(self) -> str:
        return f"{self.name}(n={self.n})" if self.n is not None else self.name


class ResidualConfig(BaseModel):
    """
    Second (residual correction) stage.

    Attributes:
        spec: Residual network architecture
        epochs: Full-batch Adam steps for the residual network
        source: First-stage parameters the residual equation is formed from
    """
    spec: MlpSpec
    epochs: int = Field(default=10_000, ge=0)
    source: Literal["final", "best"] = "final"

    model_config = ConfigDict(frozen=True)


class TrainConfig(BaseModel):
    """
    All hyperparameters of one training run.

    Attributes:
        problem: Problem name and parameters
        scale_b: Domain scaling factor b (1 = unscaled)
        spec: First-stage network architecture
        epochs: Full-batch Adam steps (1 epoch = 1 step)
        lr: Adam learning rate
        seeds: Training-set seeds; seed k selects sample set k and the init stream
        interior_count: Interior collocation / regression points
        boundary_count: Boundary points (2 in 1D, multiple of 4 in 2D, 0 for regression)
        uniform_seed: Seed whose interior set is a uniform grid instead of a Latin hypercube
        residual: Residual correction stage, if any
        eval_every: Epochs between recorded evaluations
        track_every_epoch: Record loss and errors at every epoch
        track_spectrum: Record error amplitudes |F_2|, |F_50| at eval points (1D only)
        test_grid_count: Size of the uniform test grid X~
    """
    problem: ProblemRef
    scale_b: float = Field(default=1.0, ge=1.0)
    spec: MlpSpec
    epochs: int = Field(default=20_000, ge=0)
    lr: float = Field(default=1e-3, gt=0.0)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4, 5], min_length=1)
    interior_count: int = Field(default=1_000, ge=1)
    boundary_count: int = Field(default=2, ge=0)
    uniform_seed: Optional[int] = None
    residual: Optional[ResidualConfig] = None
    eval_every: int = Field(default=100, ge=1)
    track_every_epoch: bool = False
    track_spectrum: bool = False
    test_grid_count: int = Field(default=100_000, ge=2)

    model_config = ConfigDict(frozen=True)

    @field_validator("scale_b", mode="before")
    @classmethod
    def scale_from_expression(cls, v: Any) -> float:
        """Accept '16pi' style scaling factors"""
        return parse_scale(v)

    @model_validator(mode="after")
    def check_dimensions(self) -> "TrainConfig":
        """Network input width and residual readout must match the problem"""
        if self.spec.input_dim != self.problem.dim:
            raise ValueError(
                f"Network input_dim={self.spec.input_dim} does not match "
                f"problem dimension {self.problem.dim}"
            )
        if self.residual is not None:
            if self.residual.spec.input_dim != self.problem.dim:
                raise ValueError("Residual network input_dim does not match problem dimension")
            if self.residual.spec.output_dim != 1:
                raise ValueError("Residual network must have output_dim 1")
        if self.track_spectrum and self.problem.dim != 1:
            raise ValueError("track_spectrum is only available for 1D problems")
        if self.problem.name == "regression" and self.residual is not None:
            raise ValueError("Residual correction applies to Poisson problems only")
        return self


class Variant(BaseModel):
    """
    One row of an experiment table: overrides applied to the base TrainConfig.

    Attributes:
        name: Row label (e.g. "sin(x), b=16pi")
        activation: Replaces the first-stage activation
        scale_b: Replaces the scaling factor
        epochs: Replaces the first-stage epoch budget
    """
    name: str = Field(..., min_length=1)
    activation: Optional[ActivationSpec] = None
    scale_b: Optional[float] = None
    epochs: Optional[int] = Field(default=None, ge=0)

    model_config = ConfigDict(frozen=True)

    @field_validator("scale_b", mode="before")
    @classmethod
    def scale_from_expression(cls, v: Any) -> Optional[float]:
        """Accept '16pi' style scaling factors"""
        return None if v is None else parse_scale(v)

    @property
    def slug(self) -> str:
        """File-name safe variant name"""
        slug = re.sub(r"[^A-Za-z0-9]+", "_", self.name).strip("_").lower()
        return slug or "variant"

    def apply(self, base: TrainConfig) -> TrainConfig:
        """Return the base config with this variant's overrides"""
        data = base.model_dump()
        if self.activation is not None:
            data["spec"]["activation"] = self.activation.model_dump()
        if self.scale_b is not None:
            data["scale_b"] = self.scale_b
        if self.epochs is not None:
            data["epochs"] = self.epochs
        return TrainConfig.model_validate(data)


class ExperimentConfig(BaseModel):
    """
    One experiment file: a base TrainConfig, table label and variant rows.

    Attributes:
        label: Table label used in artifact names
        output_dir: Directory for all artifacts (overridden by --out / MFP_OUT)
        base: Shared training configuration
        variants: Table rows (at least one)
    """
    label: str = Field(..., min_length=1)
    output_dir: str = "results"
    base: TrainConfig
    variants: list[Variant] = Field(..., min_length=1)

    @field_validator("label")
    @classmethod
    def label_is_filename(cls, v: str) -> str:
        """Labels become file-name prefixes"""
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", v):
            raise ValueError("Label may only contain letters, digits, '_', '-' and '.'")
        return v


class ErrorReport(BaseModel):
    """
    Relative l2 errors on one point set.

    Attributes:
        dataset: train (X) or test (X~)
        eps_u: Relative solution error of the first-stage network
        eps_f: Relative residual error of the first-stage network (Poisson only)
        eps_u_r: Relative solution error of the composite N + N_r
        eps_f_r: Relative residual error of the composite N + N_r
    """
    dataset: Literal["train", "test"]
    eps_u: float = Field(..., ge=0.0)
    eps_f: Optional[float] = Field(default=None, ge=0.0)
    eps_u_r: Optional[float] = Field(default=None, ge=0.0)
    eps_f_r: Optional[float] = Field(default=None, ge=0.0)


class HistoryRow(BaseModel):
    """One recorded evaluation during training (errors on the training set)"""
    epoch: int
    loss: float
    eps_u: float
    eps_f: Optional[float] = None
    alpha_low: Optional[float] = None
    alpha_high: Optional[float] = None


class StageSummary(BaseModel):
    """Best-loss bookkeeping of one training stage"""
    epochs: int
    best_epoch: int
    best_loss: float
    final_loss: float
    w1: Optional[float] = None
    wall_time: float


class RunSummary(BaseModel):
    """
    Per-run JSON summary.

    Attributes:
        config_hash: sha256 of the canonical TrainConfig JSON
        label: Run label (experiment label + variant)
        variant: Variant name
        seed: Training-set seed
        primary: First-stage bookkeeping
        residual: Residual-stage bookkeeping, if enabled
        train: Errors on the training set X at the best-loss checkpoint
        test: Errors on the test grid X~ at the best-loss checkpoint
        wall_time: Total seconds for the run
    """
    config_hash: str
    label: str
    variant: str
    seed: int
    primary: StageSummary
    residual: Optional[StageSummary] = None
    train: ErrorReport
    test: ErrorReport
    wall_time: float


class RunFailure(BaseModel):
    """
    Per-run failure record (kept next to partial results).

    Attributes:
        error: Human-readable message
        error_code: Machine-readable code (CONFIG_ERROR, DIVERGED, ...)
        details: Optional structured details
    """
    label: str
    variant: str
    seed: int
    error: str
    error_code: str
    details: Optional[dict[str, Any]] = None


class CheckpointHeader(BaseModel):
    """
    JSON header line of a checkpoint file.

    Attributes:
        spec: Network architecture (fixes the parameter layout)
        seed: Seed of the run that produced the parameters
        epoch: Epoch of the snapshot
        loss: Training loss at the snapshot
        problem: Problem the network was trained on
        scale_b: Scaling factor used in training (parameters are stored scaled back)
        role: primary network or residual correction network
    """
    spec: MlpSpec
    seed: int
    epoch: int
    loss: float
    problem: Optional[ProblemRef] = None
    scale_b: float = 1.0
    role: Literal["primary", "residual"] = "primary"


class SpectrumReport(BaseModel):
    """
    DFT magnitudes of a sampled sequence.

    Attributes:
        amplitudes: |F_k| for k = 0..N-1
        alpha_low: |F_2|, the low-frequency amplitude of the regression target
        alpha_high: |F_50|, the high-frequency amplitude (None when N <= 50)
    """
    amplitudes: list[float]
    alpha_low: Optional[float] = None
    alpha_high: Optional[float] = None
