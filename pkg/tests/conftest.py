from pathlib import Path

import numpy as np
import pytest

from src.config import SolverConfig
from src.models import CompositeProblem, ProblemKind, ProblemSpec, SmoothObjective, Variant
from src.problems import build_problem
from src.prox import zero_regularizer
from src.solver import solve

GOLDEN_DIR = Path(__file__).parent / "golden"

LASSO_SPEC = ProblemSpec(kind=ProblemKind.LASSO, seed=42, m=30, n=20, lam=0.1)
QUARTIC_SPEC = ProblemSpec(kind=ProblemKind.QUARTIC, seed=7, m=30, n=20, lam=0.1)
L0_SPEC = ProblemSpec(kind=ProblemKind.L0QUAD, center=[1.0, 0.3], lam=0.25)


def scalar_quadratic(curvature: float = 1.0, x0: float = 1.0) -> CompositeProblem:
    """f(x) = curvature/2 * x^2 with g = 0"""
    return CompositeProblem(
        smooth=SmoothObjective(
            value=lambda x: 0.5 * curvature * float(x @ x),
            gradient=lambda x: curvature * np.asarray(x, dtype=float),
            dimension=1,
        ),
        reg=zero_regularizer(),
        x0=[x0],
        name="scalar_quadratic",
    )


@pytest.fixture
def quadratic_config() -> SolverConfig:
    """Settings of the hand-traced 1-D run"""
    return SolverConfig(gamma_min=1.0, delta=0.5, p_min=1.0, tol=1e-10)


@pytest.fixture(scope="session")
def lasso_problem() -> CompositeProblem:
    return build_problem(LASSO_SPEC)


@pytest.fixture(scope="session")
def quartic_problem() -> CompositeProblem:
    return build_problem(QUARTIC_SPEC)


@pytest.fixture(scope="session")
def l0_problem() -> CompositeProblem:
    return build_problem(L0_SPEC)


@pytest.fixture(scope="session")
def lasso_run(lasso_problem):
    return solve(lasso_problem, SolverConfig(max_iter=20000))


@pytest.fixture(scope="session")
def lasso_reference(lasso_problem):
    """High-accuracy monotone run used as the lasso optimum"""
    config = SolverConfig(
        variant=Variant.MONOTONE, tol=1e-14, max_iter=1_000_000, check_invariants=False
    )
    return solve(lasso_problem, config)
