"""Data models for composite problems, merit states and solver telemetry"""

from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator, model_validator

from .utils import format_float


class Variant(str, Enum):
    """Line-search flavour of a run"""
    AVERAGE = "average"
    MAX = "max"
    MONOTONE = "monotone"


class StepInit(str, Enum):
    """Rule choosing the initial curvature of each iteration"""
    CONSTANT = "constant"
    BB = "bb"


class PSchedule(str, Enum):
    """Rule producing the averaging weights p_k"""
    CONSTANT = "constant"
    INCREASING = "increasing"


class RunStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    MERIT_STALL = "merit_stall"


class RateClass(str, Enum):
    FINITE = "finite"
    Q_LINEAR = "q_linear"
    SUBLINEAR = "sublinear"
    INCONCLUSIVE = "inconclusive"


class PartitionFlag(str, Enum):
    """Index-set membership of an iteration"""
    S = "S"
    S_BAR = "S_bar"
    K = "K"
    K_BAR = "K_bar"


class ProblemKind(str, Enum):
    LASSO = "lasso"
    QUARTIC = "quartic"
    L0QUAD = "l0quad"
    BOX_ROSENBROCK = "box_rosenbrock"
    QUADRATIC = "quadratic"


class SmoothObjective(BaseModel):
    """Smooth part f with its gradient"""
    model_config = ConfigDict(frozen=True)

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    dimension: PositiveInt


class Regularizer(BaseModel):
    """
    Nonsmooth part g with a prox selection

    prox(v, w) returns one global minimizer of w*g(x) + 0.5*||x - v||^2.
    minorant documents the affine function bounding g from below.
    """
    model_config = ConfigDict(frozen=True)

    value: Callable[[np.ndarray], float]
    prox: Callable[[np.ndarray, float], np.ndarray]
    name: str
    minorant: str = "0"


class CompositeProblem(BaseModel):
    """Problem min q(x) = f(x) + g(x) together with its start point"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    smooth: SmoothObjective
    reg: Regularizer
    x0: np.ndarray
    known_optimum: Optional[float] = None
    name: str = "custom"
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("x0", mode="before")
    @classmethod
    def _as_float_vector(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("x0 must be a finite point")
        return arr

    @model_validator(mode="after")
    def _x0_in_domain(self) -> "CompositeProblem":
        if self.x0.shape != (self.smooth.dimension,):
            raise ValueError(
                f"x0 has shape {self.x0.shape}, expected ({self.smooth.dimension},)"
            )
        q0 = self.smooth.value(self.x0) + self.reg.value(self.x0)
        if not np.isfinite(q0):
            raise ValueError("q(x0) must be finite (x0 outside dom q)")
        return self

    @property
    def dimension(self) -> int:
        return self.smooth.dimension


class AverageMerit(BaseModel):
    """Weighted-average merit Phi_k"""
    model_config = ConfigDict(frozen=True)

    phi: float


class MaxWindowMerit(BaseModel):
    """Sliding window of the most recent q-values, oldest first"""
    model_config = ConfigDict(frozen=True)

    recent_q: Tuple[float, ...]
    k: int = 0
    m: int = 0


MeritState = Union[AverageMerit, MaxWindowMerit]


class IterationRecord(BaseModel):
    """
    Telemetry of iteration k

    q and merit describe x^k; gamma, backtracks, step_norm and residual
    describe the accepted step x^k -> x^{k+1}. q_next and merit_next hold
    q(x^{k+1}) and the updated merit but are not part of the CSV schema.
    """
    model_config = ConfigDict(frozen=True)

    k: int
    q: float
    merit: float
    gamma: float
    backtracks: int
    step_norm: float
    residual: float
    partition: PartitionFlag
    q_next: float
    merit_next: float

    def to_csv_row(self) -> List[str]:
        """Flatten to the CSV trace columns"""
        return [
            str(self.k),
            format_float(self.q),
            format_float(self.merit),
            format_float(self.gamma),
            str(self.backtracks),
            format_float(self.step_norm),
            format_float(self.residual),
            self.partition.value,
        ]


class BacktrackOutcome(BaseModel):
    """Accepted trial point of one backtracking loop"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x_next: np.ndarray
    gamma_accepted: float
    backtracks: int
    q_next: float
    step_norm: float


class RateModel(BaseModel):
    """Power-form desingularization chi(t) = kappa * t**theta"""
    model_config = ConfigDict(frozen=True)

    kappa: float = Field(gt=0)
    theta: float = Field(gt=0, le=1)

    @staticmethod
    def classify_theta(theta: float) -> RateClass:
        if theta == 1.0:
            return RateClass.FINITE
        if 0.5 <= theta < 1.0:
            return RateClass.Q_LINEAR
        if 0.0 < theta < 0.5:
            return RateClass.SUBLINEAR
        return RateClass.INCONCLUSIVE

    @property
    def rate_class(self) -> RateClass:
        return self.classify_theta(self.theta)


class RunResult(BaseModel):
    """Outcome of a solver run"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x_final: np.ndarray
    status: RunStatus
    trace: List[IterationRecord]
    wall_time: float  # seconds
    variant: Variant
    q_initial: float
    iterates: Optional[List[np.ndarray]] = None
    violations: List[str] = Field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def final_q(self) -> float:
        return self.trace[-1].q_next if self.trace else self.q_initial

    @property
    def final_merit(self) -> float:
        return self.trace[-1].merit_next if self.trace else self.q_initial

    @property
    def final_residual(self) -> float:
        return self.trace[-1].residual if self.trace else float("inf")

    @property
    def q_history(self) -> List[float]:
        """q(x^0), ..., q(x^{K+1})"""
        return [r.q for r in self.trace] + [self.final_q]

    @property
    def merit_history(self) -> List[float]:
        """merit_0, ..., merit_{K+1}"""
        return [r.merit for r in self.trace] + [self.final_merit]

    @property
    def total_backtracks(self) -> int:
        return sum(r.backtracks for r in self.trace)


class ProblemSpec(BaseModel):
    """Recipe for a reproducible test problem"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ProblemKind = ProblemKind.LASSO
    seed: int = Field(default=42, ge=0, lt=2**64)
    m: PositiveInt = 30
    n: PositiveInt = 20
    lam: float = Field(default=0.1, ge=0)
    center: Optional[List[float]] = None


class PartitionReport(BaseModel):
    """Per-iteration index-set flags and their counts"""
    flags: List[PartitionFlag]
    in_set: int
    in_complement: int
    mu_used: Optional[float] = None
    family: str

    @property
    def evaluated(self) -> int:
        return self.in_set + self.in_complement


class RateReport(BaseModel):
    """Empirical rate classification of an error sequence"""
    theta_hat: Optional[float] = None
    rate_class: RateClass
    fit_quality: Optional[float] = None
    q_star_used: Optional[float] = None
    beta_hat: Optional[float] = None
    slope: Optional[float] = None
    n_points: int = 0
    target: str = "merit"


class InvariantReport(BaseModel):
    """Result of checking a finished run against its invariants"""
    checked: List[str] = Field(default_factory=list)
    violations: List[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations
