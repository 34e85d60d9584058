"""Configuration management using Pydantic and Pydantic Settings"""

import json
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Tuple, Type, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    field_validator,
    model_validator,
)
from pydantic_settings import (
    BaseSettings,
    JsonConfigSettingsSource,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from .errors import ContractViolation
from .models import PSchedule, ProblemSpec, StepInit, Variant
from .utils import deep_merge

# p_min must stay strictly above this so that 1/2 - sqrt((1 - p_min)/p_min) > 0
P_MIN_FLOOR = 0.8


class SolverConfig(BaseModel):
    """All algorithm parameters of a run"""

    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)

    variant: Variant = Variant.AVERAGE
    tau: float = 2.0
    gamma_min: PositiveFloat = 1e-8
    gamma_max: PositiveFloat = 1e8
    delta: float = 1e-4
    p_min: float = 0.85
    p_schedule: PSchedule = PSchedule.CONSTANT
    m: NonNegativeInt = 5
    step_init: StepInit = StepInit.CONSTANT
    gamma0: Optional[PositiveFloat] = None  # constant rule; defaults to gamma_min
    tol: PositiveFloat = 1e-8
    max_iter: PositiveInt = 10000
    mu_diag: Union[PositiveFloat, Literal["auto"]] = "auto"

    # Safeguards and bookkeeping
    max_backtracks: PositiveInt = 100
    stall_window: PositiveInt = 50
    check_invariants: bool = True
    strict_invariants: bool = False
    record_iterates: bool = False

    @field_validator("tau")
    @classmethod
    def _tau_above_one(cls, v: float) -> float:
        if not v > 1.0:
            raise ValueError(f"tau must be > 1, got {v}")
        return v

    @field_validator("delta")
    @classmethod
    def _delta_in_unit_interval(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {v}")
        return v

    @field_validator("p_min")
    @classmethod
    def _p_min_above_four_fifths(cls, v: float) -> float:
        if not P_MIN_FLOOR < v <= 1.0:
            raise ValueError(
                f"p_min must satisfy 4/5 < p_min <= 1 (got {v}); the value 4/5 itself "
                "is rejected because 1/2 - sqrt((1 - p_min)/p_min) must be positive"
            )
        return v

    @model_validator(mode="after")
    def _check_bounds(self) -> "SolverConfig":
        if self.gamma_min > self.gamma_max:
            raise ValueError(
                f"gamma_min ({self.gamma_min}) must not exceed gamma_max ({self.gamma_max})"
            )
        if self.gamma0 is not None and not self.gamma_min <= self.gamma0 <= self.gamma_max:
            raise ValueError(
                f"gamma0 ({self.gamma0}) must lie in [gamma_min, gamma_max]"
            )
        if self.mu_diag != "auto":
            lo, hi, closed = self.mu_range()
            inside = 0.0 < self.mu_diag <= hi if closed else 0.0 < self.mu_diag < hi
            if not inside:
                bracket = "]" if closed else ")"
                raise ValueError(
                    f"mu_diag={self.mu_diag} outside admissible range ({lo}, {hi}{bracket}"
                )
        return self

    @property
    def uses_window(self) -> bool:
        """True when the merit is the max over recent q-values"""
        return self.variant == Variant.MAX

    @property
    def effective_p_min(self) -> float:
        return 1.0 if self.variant == Variant.MONOTONE else self.p_min

    def p_k(self, k: int) -> float:
        """Averaging weight of iteration k, always in [p_min, 1]"""
        if self.variant == Variant.MONOTONE:
            return 1.0
        if self.p_schedule == PSchedule.INCREASING:
            return min(1.0, 1.0 - (1.0 - self.p_min) / (k + 1))
        return self.p_min

    def mu_range(self) -> Tuple[float, float, bool]:
        """
        Admissible interval of the partition constant mu

        Returns:
            (lower, upper, upper_closed): (0, delta*p_min*gamma_min/2] for the
            average family, (0, delta*gamma_min) for the max variant
        """
        if self.uses_window:
            return 0.0, self.delta * self.gamma_min, False
        return 0.0, 0.5 * self.delta * self.effective_p_min * self.gamma_min, True

    @property
    def mu(self) -> float:
        """Partition constant, resolving "auto" per variant"""
        if self.mu_diag != "auto":
            return float(self.mu_diag)
        if self.uses_window:
            return 0.5 * self.delta * self.gamma_min
        return 0.5 * self.delta * self.effective_p_min * self.gamma_min

    @property
    def initial_gamma(self) -> float:
        return self.gamma0 if self.gamma0 is not None else self.gamma_min


class OutputConfig(BaseModel):
    """Where a run writes its trace and summary"""

    model_config = ConfigDict(extra="forbid")

    csv_path: Optional[Path] = None
    json_path: Optional[Path] = None


class RunConfigFile(BaseSettings):
    """
    Fully resolved run configuration

    Values come from an optional JSON document and from explicit keyword
    arguments (command-line flags). Environment variables and dotenv files are
    deliberately not consulted so that a run is described by its inputs alone.
    """

    model_config = SettingsConfigDict(extra="forbid", case_sensitive=True)

    problem: ProblemSpec = Field(default_factory=ProblemSpec)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)

    @classmethod
    def load(
        cls,
        path: Optional[Path] = None,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> "RunConfigFile":
        """
        Build a run configuration from a JSON file and flag overrides

        Args:
            path: Optional JSON document with keys problem, solver, output
            overrides: Nested mapping of flag values; these win over the file

        Returns:
            Validated RunConfigFile with every default resolved

        Raises:
            ContractViolation: If the file is missing or is not a JSON object
            pydantic.ValidationError: If a key is unknown or a value is invalid
        """
        file_values: Dict[str, Any] = {}
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise ContractViolation(f"config file not found: {path}")
            try:
                file_values = JsonConfigSettingsSource(cls, json_file=path)()
            except json.JSONDecodeError as e:
                raise ContractViolation(f"config file {path} is not valid JSON: {e}") from e
            except (TypeError, ValueError) as e:
                raise ContractViolation(f"config file {path} must hold a JSON object") from e
            if not isinstance(file_values, dict):
                raise ContractViolation(f"config file {path} must hold a JSON object")
        merged = deep_merge(file_values, overrides or {})
        return cls(**merged)

    def resolved(self) -> Dict[str, Any]:
        """JSON-ready echo of the configuration, defaults included"""
        return self.model_dump(mode="json")
