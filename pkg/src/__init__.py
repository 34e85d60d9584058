"""Nonmonotone proximal gradient solver with convergence diagnostics"""

from .config import RunConfigFile, SolverConfig
from .models import CompositeProblem, ProblemSpec, RunResult
from .solver import npg_average, npg_max, solve

__version__ = "1.0.0"

__all__ = [
    "CompositeProblem",
    "ProblemSpec",
    "RunConfigFile",
    "RunResult",
    "SolverConfig",
    "npg_average",
    "npg_max",
    "solve",
]
