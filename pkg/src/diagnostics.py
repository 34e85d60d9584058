"""
Post-hoc analysis of solver traces

Index-set partitions, empirical rate classification of merit and iterate
errors, the fixed-point stationarity residual and invariant checks over a
finished run.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import SolverConfig
from .errors import ContractViolation, TraceTooShort
from .merit import step_violations
from .models import (
    CompositeProblem,
    InvariantReport,
    IterationRecord,
    PartitionFlag,
    PartitionReport,
    RateClass,
    RateReport,
    RunResult,
)
from .utils import problem_scale

logger = logging.getLogger(__name__)

MIN_TRACE_LENGTH = 30
R2_THRESHOLD = 0.98
ERROR_FLOOR = 1e-14
# a final jump below the floor this many times larger than the floor counts as finite termination
FINITE_JUMP = 1e4
MIN_FIT_POINTS = 5
# over a fit window around k0, (k + 1)**-beta decays like exp(-beta k / k0); steeper
# power fits are read as geometric
MAX_POWER_EXPONENT = 10.0


# Partitions


def _resolve_mu(mu: Optional[float], config: SolverConfig) -> float:
    lo, hi, closed = config.mu_range()
    mu = config.mu if mu is None else float(mu)
    inside = lo < mu <= hi if closed else lo < mu < hi
    if not inside:
        bracket = "]" if closed else ")"
        raise ContractViolation(f"mu={mu!r} outside admissible range ({lo}, {hi!r}{bracket}")
    return mu


def partition_average(
    trace: Sequence[IterationRecord],
    q_values: Optional[Sequence[float]],
    mu: Optional[float],
    config: SolverConfig,
) -> PartitionReport:
    """
    Split iterations into S and its complement

    k is in S when q(x^k) - Phi_{k+1} <= mu/2 ||x^{k+1} - x^k||^2, ties
    included.

    Args:
        trace: Records of an average-family run
        q_values: q(x^0), q(x^1), ...; the records' own q-values when None
        mu: Partition constant in (0, delta*p_min*gamma_min/2]; config.mu when None
        config: Configuration of the run

    Raises:
        ContractViolation: If mu is out of range or the run used the max variant
    """
    if config.uses_window:
        raise ContractViolation("partition_average needs an average-family run")
    mu = _resolve_mu(mu, config)
    q_values = [r.q for r in trace] if q_values is None else list(q_values)
    if len(q_values) < len(trace):
        raise ContractViolation("q_values shorter than the trace")

    flags: List[PartitionFlag] = []
    for record in trace:
        lhs = q_values[record.k] - record.merit_next
        rhs = 0.5 * mu * record.step_norm ** 2
        flags.append(PartitionFlag.S if lhs <= rhs else PartitionFlag.S_BAR)
    in_set = sum(1 for f in flags if f == PartitionFlag.S)
    return PartitionReport(
        flags=flags,
        in_set=in_set,
        in_complement=len(flags) - in_set,
        mu_used=mu,
        family="S",
    )


def partition_max(
    trace: Sequence[IterationRecord],
    q_values: Sequence[float],
    window_merits: Sequence[float],
    mu: Optional[float],
    config: SolverConfig,
) -> PartitionReport:
    """
    Split iterations into K and its complement

    k is in K when q(x^{l(k+1)}) - q(x^{k+1}) > mu/2 ||x^{k+1} - x^k||^2
    (strict).

    Args:
        trace: Records of a max-variant run
        q_values: q(x^0), ..., q(x^{K+1})
        window_merits: q(x^{l(0)}), ..., q(x^{l(K+1)})
        mu: Partition constant in (0, delta*gamma_min); config.mu when None
        config: Configuration of the run

    Raises:
        ContractViolation: If mu is out of range or the histories are too short
    """
    if not config.uses_window:
        raise ContractViolation("partition_max needs a max-variant run")
    mu = _resolve_mu(mu, config)
    if len(q_values) <= len(trace) or len(window_merits) <= len(trace):
        raise ContractViolation("q_values and window_merits need one entry past the trace")

    flags: List[PartitionFlag] = []
    for record in trace:
        k = record.k
        diff = window_merits[k + 1] - q_values[k + 1]
        rhs = 0.5 * mu * record.step_norm ** 2
        flags.append(PartitionFlag.K if diff > rhs else PartitionFlag.K_BAR)
    in_set = sum(1 for f in flags if f == PartitionFlag.K)
    return PartitionReport(
        flags=flags,
        in_set=in_set,
        in_complement=len(flags) - in_set,
        mu_used=mu,
        family="K",
    )


def partition_lagged(
    q_values: Sequence[float],
    merits: Sequence[float],
    lag: int,
) -> PartitionReport:
    """
    Lagged split K1 = {k | q(x^k) <= Phi_{k+lag}}, K2 its complement

    Indices whose k + lag runs past the merit history are not evaluated.
    """
    if lag < 1:
        raise ContractViolation(f"lag must be >= 1, got {lag}")
    count = min(len(q_values), len(merits) - lag)
    flags = [
        PartitionFlag.K if q_values[k] <= merits[k + lag] else PartitionFlag.K_BAR
        for k in range(max(0, count))
    ]
    in_set = sum(1 for f in flags if f == PartitionFlag.K)
    return PartitionReport(
        flags=flags,
        in_set=in_set,
        in_complement=len(flags) - in_set,
        family=f"K1(lag={lag})",
    )


# Rate estimation


def _linear_fit(xs: np.ndarray, ys: np.ndarray) -> Tuple[float, float]:
    """Least-squares slope and R^2 of ys against xs"""
    slope, intercept = np.polyfit(xs, ys, 1)
    residuals = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    if ss_tot == 0.0:
        return float(slope), 0.0
    return float(slope), 1.0 - float(np.sum(residuals ** 2)) / ss_tot


def classify_error_sequence(
    errors: Sequence[float],
    scale: float = 1.0,
    target: str = "merit",
) -> RateReport:
    """
    Classify the decay of a nonnegative error sequence

    Values at or below 1e-14 * scale are treated as zero. A sequence that
    drops from well above that floor to it and stays there is finite.
    Otherwise log e_k is regressed on k (geometric decay) and on log(k + 1)
    (power decay) over the last half of the values above the floor; the
    better fit with R^2 >= 0.98 decides. A power fit with exponent above
    MAX_POWER_EXPONENT is read as geometric.

    Args:
        errors: e_0, e_1, ... with e_k >= 0
        scale: Problem scale max(1, |q(x0)|)
        target: "merit" reads a power law k^-beta as theta = (beta - 1)/(2 beta),
            "iterate" as theta = beta/(1 + 2 beta)

    Returns:
        RateReport; theta_hat is 1 for finite, 1/2 for q_linear
    """
    e = np.maximum(np.asarray(errors, dtype=float), 0.0)
    floor = ERROR_FLOOR * scale
    above = np.flatnonzero(e > floor)

    if above.size == 0:
        return RateReport(theta_hat=1.0, rate_class=RateClass.FINITE, n_points=0, target=target)
    last = int(above[-1])
    if e.size - 1 - last >= 2 and e[last] > FINITE_JUMP * floor:
        logger.debug(f"Error sequence reaches the floor after index {last}")
        return RateReport(theta_hat=1.0, rate_class=RateClass.FINITE, n_points=int(above.size), target=target)

    idx = above[above.size // 2:]
    if idx.size < MIN_FIT_POINTS:
        idx = above
    if idx.size < 3:
        return RateReport(rate_class=RateClass.INCONCLUSIVE, n_points=int(idx.size), target=target)

    log_e = np.log(e[idx])
    k = idx.astype(float)
    lin_slope, lin_r2 = _linear_fit(k, log_e)
    pow_slope, pow_r2 = _linear_fit(np.log(k + 1.0), log_e)
    beta = -pow_slope
    logger.debug(
        f"Rate fits over {idx.size} points: linear slope={lin_slope!r} R2={lin_r2!r}, "
        f"power beta={beta!r} R2={pow_r2!r}"
    )

    linear_wins = lin_r2 >= R2_THRESHOLD and lin_r2 >= pow_r2
    steep_power = beta > MAX_POWER_EXPONENT and pow_r2 >= R2_THRESHOLD
    if lin_slope < 0 and (linear_wins or steep_power):
        return RateReport(
            theta_hat=0.5,
            rate_class=RateClass.Q_LINEAR,
            fit_quality=max(lin_r2, pow_r2) if steep_power else lin_r2,
            slope=lin_slope,
            beta_hat=beta,
            n_points=int(idx.size),
            target=target,
        )
    if pow_r2 >= R2_THRESHOLD and beta > 0:
        if target == "iterate":
            theta = beta / (1.0 + 2.0 * beta)
        elif beta > 1.0:
            theta = (beta - 1.0) / (2.0 * beta)
        else:
            theta = None
        if theta is not None:
            return RateReport(
                theta_hat=theta,
                rate_class=RateClass.SUBLINEAR,
                fit_quality=pow_r2,
                slope=lin_slope,
                beta_hat=beta,
                n_points=int(idx.size),
                target=target,
            )
    return RateReport(
        rate_class=RateClass.INCONCLUSIVE,
        fit_quality=max(lin_r2, pow_r2),
        slope=lin_slope,
        beta_hat=beta,
        n_points=int(idx.size),
        target=target,
    )


def estimate_rate(trace: Sequence[IterationRecord], q_star: float) -> RateReport:
    """
    Classify the convergence of the merit sequence to q_star

    Args:
        trace: Run trace with at least 30 records
        q_star: Reference optimal value, at most the smallest merit

    Returns:
        RateReport over e_k = merit_k - q_star

    Raises:
        TraceTooShort: If the trace has fewer than 30 records
        ContractViolation: If q_star exceeds the observed merits
    """
    if len(trace) < MIN_TRACE_LENGTH:
        raise TraceTooShort(
            f"trace too short: {len(trace)} records, rate estimation needs {MIN_TRACE_LENGTH}"
        )
    merits = np.array([r.merit for r in trace] + [trace[-1].merit_next], dtype=float)
    scale = problem_scale(trace[0].q)
    if q_star > merits.min() + 1e-12 * scale:
        raise ContractViolation(
            f"q_star={q_star!r} lies above the smallest observed merit {merits.min()!r}"
        )
    report = classify_error_sequence(merits - q_star, scale=scale, target="merit")
    report = report.model_copy(update={"q_star_used": q_star})
    logger.info(
        f"Merit rate: {report.rate_class.value} theta_hat={report.theta_hat} "
        f"R2={report.fit_quality}"
    )
    return report


def estimate_iterate_rate(iterates: Sequence[np.ndarray], x_ref: np.ndarray) -> RateReport:
    """
    Classify the convergence of ||x^k - x_ref||

    Raises:
        TraceTooShort: If fewer than 30 iterates were recorded
    """
    if iterates is None or len(iterates) < MIN_TRACE_LENGTH:
        count = 0 if iterates is None else len(iterates)
        raise TraceTooShort(
            f"trace too short: {count} iterates, rate estimation needs {MIN_TRACE_LENGTH}"
        )
    x_ref = np.asarray(x_ref, dtype=float)
    distances = [float(np.linalg.norm(np.asarray(x) - x_ref)) for x in iterates]
    scale = max(1.0, float(np.linalg.norm(x_ref)))
    return classify_error_sequence(distances, scale=scale, target="iterate")


# Stationarity and run invariants


def stationarity_check(problem: CompositeProblem, x: np.ndarray, eps: float = 1e-8) -> float:
    """
    Fixed-point residual ||prox_g(x - grad f(x), 1) - x||

    Zero exactly at prox fixed points, which are stationary for the
    chosen prox selection.
    """
    x = np.asarray(x, dtype=float)
    moved = np.asarray(problem.reg.prox(x - problem.smooth.gradient(x), 1.0), dtype=float)
    value = float(np.linalg.norm(moved - x))
    logger.debug(f"Stationarity residual {value!r} ({'within' if value <= eps else 'above'} {eps!r})")
    return value


def steps_vanish(result: RunResult, tol: float, gamma_min: float, tail: int = 10) -> bool:
    """Largest of the last steps is at most 10 * tol / gamma_min"""
    steps = [r.step_norm for r in result.trace[-tail:]]
    return bool(steps) and max(steps) <= 10.0 * tol / gamma_min


def gamma_tail_bounded(trace: Sequence[IterationRecord], window: int = 50) -> bool:
    """
    Accepted curvatures over the tail are finite and do not increase forever

    A strictly increasing tail over a full window would signal unbounded
    backtracking. Shorter traces only need finite curvatures.
    """
    gammas = np.array([r.gamma for r in trace[-window:]], dtype=float)
    if gammas.size == 0 or not np.all(np.isfinite(gammas)):
        return False
    if gammas.size < max(window, 2):
        return True
    return not bool(np.all(np.diff(gammas) > 0))


def verify_trace(result: RunResult, config: SolverConfig) -> InvariantReport:
    """
    Check a finished run against every run invariant

    Covers merit monotonicity, the acceptance certificate, sublevel
    containment, gamma_k >= gamma_min, Phi_k >= q(x^k) and the sandwich bound
    for the average family, and merit_final >= q_final. The merit may still lag
    q when the run stops, so their gap is not checked.
    """
    scale = problem_scale(result.q_initial)
    tol_abs = 1e-12 * scale
    violations: List[str] = []
    checked = ["acceptance", "merit_monotone", "sublevel", "gamma_min"]
    if config.uses_window:
        checked.append("window_size")
    else:
        checked += ["merit_above_q", "sandwich"]

    for record in result.trace:
        violations += step_violations(
            k=record.k,
            config=config,
            q_k=record.q,
            q_next=record.q_next,
            merit_k=record.merit,
            merit_next=record.merit_next,
            q0=result.q_initial,
            gamma=record.gamma,
            step_norm=record.step_norm,
            p_k=config.p_k(record.k),
            window_size=min(record.k + 1, config.m) + 1 if config.uses_window else 0,
            tol_abs=tol_abs,
        )

    checked.append("final_order")
    if result.trace and result.final_merit < result.final_q - tol_abs:
        violations.append(
            f"final merit {result.final_merit!r} lies below final q {result.final_q!r}"
        )

    if violations:
        logger.warning(f"Trace check found {len(violations)} violation(s)")
    return InvariantReport(checked=checked, violations=violations)
