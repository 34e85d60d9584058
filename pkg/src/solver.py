"""Nonmonotone proximal gradient drivers with average and max line searches"""

import logging
import time
from typing import List, NamedTuple, Optional

import numpy as np

from .config import SolverConfig
from .errors import ContractViolation, InvariantViolation, SolverAbort
from .merit import evaluate_q, merit_init, merit_update, merit_value, step_violations
from .models import (
    BacktrackOutcome,
    CompositeProblem,
    IterationRecord,
    MaxWindowMerit,
    PartitionFlag,
    RunResult,
    RunStatus,
    StepInit,
    Variant,
)
from .prox import subproblem_solve
from .utils import problem_scale

logger = logging.getLogger(__name__)

# merit decreases below this fraction of the problem scale count as no progress,
# unless the residual reaches a new minimum
STALL_EPS = 1e-15


class StepHistory(NamedTuple):
    """Last two iterates and their gradients, input of the spectral rule"""
    x_prev: np.ndarray
    x_cur: np.ndarray
    grad_prev: np.ndarray
    grad_cur: np.ndarray


def initial_stepsize(history: Optional[StepHistory], config: SolverConfig) -> float:
    """
    Choose gamma_k^0 in [gamma_min, gamma_max]

    The constant rule returns gamma0 (gamma_min unless configured). The
    spectral rule returns <s, y>/<s, s> clipped to the bounds and falls back to
    the constant value without history, for s = 0 or for <s, y> <= 0.
    """
    fallback = config.initial_gamma
    if config.step_init == StepInit.CONSTANT or history is None:
        return fallback
    s = history.x_cur - history.x_prev
    y = history.grad_cur - history.grad_prev
    ss = float(np.dot(s, s))
    sy = float(np.dot(s, y))
    if ss == 0.0 or sy <= 0.0 or not np.isfinite(sy):
        return fallback
    return float(np.clip(sy / ss, config.gamma_min, config.gamma_max))


def residual(gamma_k: float, step_norm: float) -> float:
    """Computable stationarity surrogate gamma_k * ||x^{k+1} - x^k||"""
    if step_norm == 0.0:
        return 0.0
    return gamma_k * step_norm


def backtrack(
    x: np.ndarray,
    merit: float,
    gamma0: float,
    problem: CompositeProblem,
    config: SolverConfig,
    grad: Optional[np.ndarray] = None,
) -> BacktrackOutcome:
    """
    Amplify the curvature until the trial point passes the acceptance test

    For i = 0, 1, 2, ... the trial point solves the subproblem with
    gamma = tau**i * gamma0 and is accepted once
    q(trial) <= merit - delta * gamma / 2 * ||trial - x||^2.

    Args:
        x: Current iterate
        merit: Merit value to undercut (Phi_k or the window maximum)
        gamma0: Initial curvature of this iteration
        problem: Composite problem
        config: Solver configuration
        grad: Gradient of f at x, computed when omitted

    Returns:
        BacktrackOutcome holding the accepted point and its cached q-value

    Raises:
        SolverAbort: If max_backtracks amplifications do not suffice
    """
    if grad is None:
        grad = problem.smooth.gradient(x)
    for i in range(config.max_backtracks + 1):
        gamma = gamma0 * config.tau ** i
        trial = subproblem_solve(x, grad, gamma, problem.reg)
        q_trial = evaluate_q(problem, trial)
        step_norm = float(np.linalg.norm(trial - x))
        if np.isfinite(q_trial) and q_trial <= merit - config.delta * gamma / 2.0 * step_norm ** 2:
            if i > 0:
                logger.debug(f"Accepted after {i} backtracks (gamma={gamma!r})")
            return BacktrackOutcome(
                x_next=trial,
                gamma_accepted=gamma,
                backtracks=i,
                q_next=q_trial,
                step_norm=step_norm,
            )
    logger.warning(f"Backtracking exceeded {config.max_backtracks} amplifications")
    raise SolverAbort(
        f"backtracking exceeded {config.max_backtracks} amplifications",
        diagnostic=(
            f"nonfinite curvature: gamma grew to {gamma0 * config.tau ** config.max_backtracks!r} "
            f"without acceptance (merit={merit!r}); check that g has an affine minorant "
            "and that f is finite"
        ),
    )


class ProximalGradientSolver:
    """
    Shared driver for every line-search variant

    The average family (average, monotone) keeps Phi_k and the max variant a
    window of recent q-values; everything else is one code path, so
    (average, p = 1), (max, m = 0) and monotone produce identical iterates.
    """

    def __init__(self, problem: CompositeProblem, config: SolverConfig):
        self.problem = problem
        self.config = config

    def _partition_flag(
        self, q_k: float, q_next: float, merit_next: float, step_norm: float
    ) -> PartitionFlag:
        rhs = 0.5 * self.config.mu * step_norm * step_norm
        if self.config.uses_window:
            return PartitionFlag.K if merit_next - q_next > rhs else PartitionFlag.K_BAR
        return PartitionFlag.S if q_k - merit_next <= rhs else PartitionFlag.S_BAR

    def run(self) -> RunResult:
        config = self.config
        problem = self.problem
        smooth = problem.smooth

        x = problem.x0.copy()
        q = evaluate_q(problem, x)
        if not np.isfinite(q):
            raise ContractViolation("q(x0) must be finite")
        q0 = q
        scale = problem_scale(q0)
        tol_abs = 1e-12 * scale
        state = merit_init(q0, config)
        grad = smooth.gradient(x)
        history: Optional[StepHistory] = None

        trace: List[IterationRecord] = []
        iterates: Optional[List[np.ndarray]] = [x.copy()] if config.record_iterates else None
        violations: List[str] = []
        status = RunStatus.MAX_ITER
        stalled = 0
        best_residual = np.inf

        logger.info(
            f"Starting {config.variant.value} run on {problem.name} "
            f"(n={problem.dimension}, q0={q0!r}, tol={config.tol!r})"
        )
        start_time = time.perf_counter()

        for k in range(config.max_iter):
            gamma0 = initial_stepsize(history, config)
            merit = merit_value(state)
            outcome = backtrack(x, merit, gamma0, problem, config, grad=grad)

            p_k = config.p_k(k)
            new_state = merit_update(state, outcome.q_next, p_k)
            new_merit = merit_value(new_state)
            res = residual(outcome.gamma_accepted, outcome.step_norm)

            record = IterationRecord(
                k=k,
                q=q,
                merit=merit,
                gamma=outcome.gamma_accepted,
                backtracks=outcome.backtracks,
                step_norm=outcome.step_norm,
                residual=res,
                partition=self._partition_flag(q, outcome.q_next, new_merit, outcome.step_norm),
                q_next=outcome.q_next,
                merit_next=new_merit,
            )
            trace.append(record)
            logger.debug(
                f"k={k} q={q!r} merit={merit!r} gamma={outcome.gamma_accepted!r} "
                f"i_k={outcome.backtracks} step={outcome.step_norm!r} res={res!r}"
            )

            if config.check_invariants:
                window_size = (
                    len(new_state.recent_q) if isinstance(new_state, MaxWindowMerit) else 0
                )
                issues = step_violations(
                    k=k,
                    config=config,
                    q_k=q,
                    q_next=outcome.q_next,
                    merit_k=merit,
                    merit_next=new_merit,
                    q0=q0,
                    gamma=outcome.gamma_accepted,
                    step_norm=outcome.step_norm,
                    p_k=p_k,
                    window_size=window_size,
                    tol_abs=tol_abs,
                )
                for issue in issues:
                    logger.warning(f"Invariant violation: {issue}")
                violations.extend(issues)
                if issues and config.strict_invariants:
                    raise InvariantViolation("; ".join(issues))

            if merit - new_merit > STALL_EPS * scale or res < best_residual:
                stalled = 0
            else:
                stalled += 1
            best_residual = min(best_residual, res)

            x_next = outcome.x_next
            grad_next = smooth.gradient(x_next)
            history = StepHistory(x, x_next, grad, grad_next)
            x, q, grad, state = x_next, outcome.q_next, grad_next, new_state
            if iterates is not None:
                iterates.append(x.copy())

            if res <= config.tol:
                status = RunStatus.CONVERGED
                break
            if stalled >= config.stall_window:
                logger.warning(
                    f"Merit stalled for {stalled} iterations at k={k} (residual={res!r})"
                )
                status = RunStatus.MERIT_STALL
                break

        wall_time = time.perf_counter() - start_time
        result = RunResult(
            x_final=x,
            status=status,
            trace=trace,
            wall_time=wall_time,
            variant=config.variant,
            q_initial=q0,
            iterates=iterates,
            violations=violations,
        )
        logger.info(
            f"Finished {config.variant.value} run: status={status.value} "
            f"iterations={result.iterations} final_q={result.final_q!r} "
            f"residual={result.final_residual!r} ({wall_time:.3f}s)"
        )
        return result


def npg_average(problem: CompositeProblem, config: SolverConfig) -> RunResult:
    """
    Nonmonotone proximal gradient method with average line search

    The monotone variant runs this loop with p_k = 1.

    Raises:
        ContractViolation: If config.variant is max
    """
    if config.variant not in (Variant.AVERAGE, Variant.MONOTONE):
        raise ContractViolation(f"npg_average needs variant average or monotone, got {config.variant.value}")
    return ProximalGradientSolver(problem, config).run()


def npg_max(problem: CompositeProblem, config: SolverConfig) -> RunResult:
    """
    Nonmonotone proximal gradient method with max line search

    With m = 0 the window holds only q(x^k) and the method is the monotone one.

    Raises:
        ContractViolation: If config.variant is not max
    """
    if config.variant != Variant.MAX:
        raise ContractViolation(f"npg_max needs variant max, got {config.variant.value}")
    return ProximalGradientSolver(problem, config).run()


def solve(problem: CompositeProblem, config: SolverConfig) -> RunResult:
    """Dispatch to the driver matching config.variant"""
    if config.variant == Variant.MAX:
        return npg_max(problem, config)
    return npg_average(problem, config)
