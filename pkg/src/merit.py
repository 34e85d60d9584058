"""Objective evaluation and the merit engines shared by every solver variant"""

import logging
from typing import List

import numpy as np

from .config import SolverConfig
from .errors import ContractViolation
from .models import AverageMerit, CompositeProblem, MaxWindowMerit, MeritState

logger = logging.getLogger(__name__)


def evaluate_q(problem: CompositeProblem, x: np.ndarray) -> float:
    """
    Evaluate q(x) = f(x) + g(x)

    Args:
        problem: Composite problem
        x: Point of the problem's dimension

    Returns:
        f(x) + g(x), or +inf when g(x) = +inf or f overflows

    Raises:
        ContractViolation: If x has the wrong shape
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dimension,):
        raise ContractViolation(
            f"point has shape {x.shape}, problem dimension is {problem.dimension}"
        )
    g = float(problem.reg.value(x))
    if g == np.inf:
        return np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        total = float(problem.smooth.value(x)) + g
    if np.isnan(total):
        return np.inf
    return total


def merit_init(q0: float, config: SolverConfig) -> MeritState:
    """Phi_0 = q(x^0) for the average family, window [q(x^0)] for the max variant"""
    if config.uses_window:
        return MaxWindowMerit(recent_q=(q0,), k=0, m=config.m)
    return AverageMerit(phi=q0)


def merit_value(state: MeritState) -> float:
    """Merit an iterate must undercut: Phi_k, or the window maximum"""
    if isinstance(state, MaxWindowMerit):
        return max(state.recent_q)
    return state.phi


def merit_update(state: MeritState, q_next: float, p_k: float) -> MeritState:
    """
    Advance the merit after an accepted step

    Average: Phi' = (1 - p_k) Phi + p_k q_next. Max: q_next is appended and
    the oldest value dropped once the window would exceed m + 1 entries.
    """
    if isinstance(state, MaxWindowMerit):
        window = state.recent_q + (q_next,)
        if len(window) > state.m + 1:
            window = window[len(window) - (state.m + 1):]
        return MaxWindowMerit(recent_q=window, k=state.k + 1, m=state.m)

    blended = (1.0 - p_k) * state.phi + p_k * q_next
    # rounding can leave the blend one ulp below q_next
    return AverageMerit(phi=max(blended, q_next))


def step_violations(
    *,
    k: int,
    config: SolverConfig,
    q_k: float,
    q_next: float,
    merit_k: float,
    merit_next: float,
    q0: float,
    gamma: float,
    step_norm: float,
    p_k: float,
    window_size: int,
    tol_abs: float,
) -> List[str]:
    """
    Check one accepted step against the run invariants

    Args:
        k: Iteration index
        config: Solver configuration of the run
        q_k, q_next: q(x^k) and q(x^{k+1})
        merit_k, merit_next: merit before and after the update
        q0: q(x^0)
        gamma: Accepted curvature gamma_k
        step_norm: ||x^{k+1} - x^k||
        p_k: Averaging weight used for the update
        window_size: Current max-window length (0 for the average family)
        tol_abs: Absolute tolerance, 1e-12 * max(1, |q(x^0)|)

    Returns:
        Human-readable descriptions of every failed invariant
    """
    issues: List[str] = []
    sq = step_norm * step_norm
    half_dg = 0.5 * config.delta * gamma

    if q_next > merit_k - half_dg * sq + tol_abs:
        issues.append(f"k={k}: acceptance certificate fails ({q_next!r} vs merit {merit_k!r})")
    if merit_next > merit_k + tol_abs:
        issues.append(f"k={k}: merit increased {merit_k!r} -> {merit_next!r}")
    if q_next > q0 + tol_abs:
        issues.append(f"k={k}: iterate left the sublevel set of q(x0)")
    if gamma < config.gamma_min:
        issues.append(f"k={k}: gamma {gamma!r} below gamma_min")

    if config.uses_window:
        if window_size > config.m + 1:
            issues.append(f"k={k}: window holds {window_size} > m+1 values")
    else:
        if merit_k < q_k - tol_abs:
            issues.append(f"k={k}: Phi_k < q(x^k)")
        lower = q_next + config.delta * (1.0 - p_k) * gamma / 2.0 * sq
        upper = merit_k - config.delta * p_k * gamma / 2.0 * sq
        if lower > merit_next + tol_abs or merit_next > upper + tol_abs:
            issues.append(f"k={k}: sandwich bound on Phi_(k+1) fails")
    return issues
