"""
Reproducible test problems and the l0 brute-force oracle

Every random quantity comes from SplitMix64 so that a ProblemSpec yields
bitwise-identical data on every platform.
"""

import itertools
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractViolation
from .merit import evaluate_q
from .models import CompositeProblem, ProblemKind, ProblemSpec, SmoothObjective
from .prox import box_indicator, l0_regularizer, l1_regularizer, zero_regularizer
from .rng import SplitMix64

logger = logging.getLogger(__name__)

L0_MAX_DIMENSION = 12
NOISE_LEVEL = 0.01
SPARSITY = 0.1


def _l1_or_zero(lam: float):
    return l1_regularizer(lam) if lam > 0 else zero_regularizer()


def _regression_data(spec: ProblemSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Draw A, the planted sparse solution and b from the ProblemSpec seed

    Draw order: A row-major, then the support indices, then the support
    values, then the noise.
    """
    rng = SplitMix64(spec.seed)
    A = rng.normals(spec.m * spec.n).reshape(spec.m, spec.n)
    support_size = max(1, int(round(SPARSITY * spec.n)))
    support = rng.sample_indices(spec.n, support_size)
    x_planted = np.zeros(spec.n)
    x_planted[support] = rng.normals(support_size)
    b = A @ x_planted + NOISE_LEVEL * rng.normals(spec.m)
    return A, b, x_planted


def make_lasso(spec: ProblemSpec) -> CompositeProblem:
    """f(x) = 1/2 ||Ax - b||^2, g = lam ||x||_1, x0 = 0"""
    A, b, x_planted = _regression_data(spec)

    def value(x: np.ndarray) -> float:
        r = A @ x - b
        return 0.5 * float(r @ r)

    def gradient(x: np.ndarray) -> np.ndarray:
        return A.T @ (A @ x - b)

    logger.info(f"Built lasso problem (m={spec.m}, n={spec.n}, seed={spec.seed}, lam={spec.lam})")
    return CompositeProblem(
        smooth=SmoothObjective(value=value, gradient=gradient, dimension=spec.n),
        reg=_l1_or_zero(spec.lam),
        x0=np.zeros(spec.n),
        name="lasso",
        metadata={"A": A, "b": b, "x_planted": x_planted, "lam": spec.lam},
    )


def make_quartic(spec: ProblemSpec) -> CompositeProblem:
    """
    f(x) = 1/4 sum_i (a_i^T x - b_i)^4, g = lam ||x||_1, x0 = 0

    The gradient sum_i (a_i^T x - b_i)^3 a_i is locally but not globally
    Lipschitz.
    """
    A, b, x_planted = _regression_data(spec)

    def value(x: np.ndarray) -> float:
        r = A @ x - b
        return 0.25 * float(np.sum(r ** 4))

    def gradient(x: np.ndarray) -> np.ndarray:
        r = A @ x - b
        return A.T @ (r ** 3)

    logger.info(f"Built quartic problem (m={spec.m}, n={spec.n}, seed={spec.seed}, lam={spec.lam})")
    return CompositeProblem(
        smooth=SmoothObjective(value=value, gradient=gradient, dimension=spec.n),
        reg=_l1_or_zero(spec.lam),
        x0=np.zeros(spec.n),
        name="quartic",
        metadata={"A": A, "b": b, "x_planted": x_planted, "lam": spec.lam},
    )


def make_l0_quadratic(spec: ProblemSpec) -> CompositeProblem:
    """
    f(x) = 1/2 ||x - c||^2, g = lam ||x||_0, x0 = 0

    c is spec.center when given (its length fixes n), otherwise n standard
    normals drawn from the seed.

    Raises:
        ContractViolation: If n exceeds 12
    """
    if spec.center is not None:
        center = np.array(spec.center, dtype=float)
    else:
        if spec.n > L0_MAX_DIMENSION:
            raise ContractViolation(
                f"l0quad needs n <= {L0_MAX_DIMENSION} for the brute-force oracle, got {spec.n}"
            )
        center = SplitMix64(spec.seed).normals(spec.n)
    n = center.size
    if n == 0 or n > L0_MAX_DIMENSION:
        raise ContractViolation(
            f"l0quad needs 1 <= n <= {L0_MAX_DIMENSION} for the brute-force oracle, got {n}"
        )

    def value(x: np.ndarray) -> float:
        d = x - center
        return 0.5 * float(d @ d)

    def gradient(x: np.ndarray) -> np.ndarray:
        return x - center

    logger.info(f"Built l0quad problem (n={n}, lam={spec.lam})")
    return CompositeProblem(
        smooth=SmoothObjective(value=value, gradient=gradient, dimension=n),
        reg=l0_regularizer(spec.lam),
        x0=np.zeros(n),
        name="l0quad",
        metadata={"center": center, "lam": spec.lam},
    )


def make_box_rosenbrock() -> CompositeProblem:
    """Rosenbrock on the box [-2, 2]^2 from (-1.2, 1); minimum q(1, 1) = 0"""

    def value(x: np.ndarray) -> float:
        return 100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2

    def gradient(x: np.ndarray) -> np.ndarray:
        t = x[1] - x[0] ** 2
        return np.array([-400.0 * x[0] * t - 2.0 * (1.0 - x[0]), 200.0 * t])

    return CompositeProblem(
        smooth=SmoothObjective(value=value, gradient=gradient, dimension=2),
        reg=box_indicator([-2.0, -2.0], [2.0, 2.0]),
        x0=np.array([-1.2, 1.0]),
        known_optimum=0.0,
        name="box_rosenbrock",
        metadata={"lo": -2.0, "hi": 2.0},
    )


def make_quadratic(spec: ProblemSpec) -> CompositeProblem:
    """f(x) = 1/2 ||x||^2 with g = lam ||x||_1 (or 0), x0 = 1; minimum q(0) = 0"""

    def value(x: np.ndarray) -> float:
        return 0.5 * float(x @ x)

    def gradient(x: np.ndarray) -> np.ndarray:
        return np.array(x, dtype=float)

    return CompositeProblem(
        smooth=SmoothObjective(value=value, gradient=gradient, dimension=spec.n),
        reg=_l1_or_zero(spec.lam),
        x0=np.ones(spec.n),
        known_optimum=0.0,
        name="quadratic",
        metadata={"lam": spec.lam},
    )


_BUILDERS: Dict[ProblemKind, Callable[[ProblemSpec], CompositeProblem]] = {
    ProblemKind.LASSO: make_lasso,
    ProblemKind.QUARTIC: make_quartic,
    ProblemKind.L0QUAD: make_l0_quadratic,
    ProblemKind.BOX_ROSENBROCK: lambda spec: make_box_rosenbrock(),
    ProblemKind.QUADRATIC: make_quadratic,
}


def build_problem(spec: ProblemSpec) -> CompositeProblem:
    """Construct the problem a ProblemSpec describes"""
    return _BUILDERS[spec.kind](spec)


# l0 oracle


def _l0_data(problem: CompositeProblem) -> Tuple[np.ndarray, float]:
    if "center" not in problem.metadata or "lam" not in problem.metadata:
        raise ContractViolation(f"problem {problem.name} is not an l0quad instance")
    center = np.asarray(problem.metadata["center"], dtype=float)
    if center.size > L0_MAX_DIMENSION:
        raise ContractViolation(f"oracle enumerates 2^n supports, n={center.size} is too large")
    return center, float(problem.metadata["lam"])


def l0_support_value(center: np.ndarray, lam: float, support: Sequence[int]) -> float:
    """
    q at the minimizer of f restricted to a support

    The restricted minimizer keeps c_i on the support and 0 elsewhere, which
    costs 1/2 sum_{i not in S} c_i^2 + lam |S|. Evaluated with the same
    expression as f + g so that it matches q at that point exactly.
    """
    center = np.asarray(center, dtype=float)
    x = np.zeros_like(center)
    idx = list(support)
    x[idx] = center[idx]
    d = x - center
    return 0.5 * float(d @ d) + lam * float(np.count_nonzero(x))


def l0_bruteforce_oracle(problem: CompositeProblem) -> Tuple[np.ndarray, float]:
    """
    Global minimizer of an l0quad instance by enumerating all 2^n supports

    Supports are visited by increasing cardinality and lexicographically
    within one cardinality; only a strictly smaller value replaces the
    incumbent, which realizes the tie-break.

    Returns:
        (x_star, q_star)
    """
    center, lam = _l0_data(problem)
    n = center.size
    best_support: Tuple[int, ...] = ()
    best_value = l0_support_value(center, lam, ())
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            value = l0_support_value(center, lam, support)
            if value < best_value:
                best_support, best_value = support, value
    x_star = np.zeros(n)
    x_star[list(best_support)] = center[list(best_support)]
    logger.debug(f"l0 oracle: support={best_support} q*={best_value!r}")
    return x_star, best_value


def l0_stationary_value(problem: CompositeProblem, x: np.ndarray) -> float:
    """Brute-force value of the support on which x sits"""
    center, lam = _l0_data(problem)
    support = np.flatnonzero(np.asarray(x, dtype=float)).tolist()
    return l0_support_value(center, lam, support)


# Problem-validity contract


def gradient_check(
    smooth: SmoothObjective,
    x: np.ndarray,
    h: float = 1e-6,
) -> float:
    """
    Relative mismatch between the analytic gradient and central differences

    Returns:
        ||fd - grad|| / max(1, ||grad||)
    """
    x = np.asarray(x, dtype=float)
    grad = np.asarray(smooth.gradient(x), dtype=float)
    fd = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fd[i] = (smooth.value(x + e) - smooth.value(x - e)) / (2.0 * h)
    return float(np.linalg.norm(fd - grad) / max(1.0, np.linalg.norm(grad)))


def validate_problem(
    problem: CompositeProblem,
    probes: int = 5,
    rel_tol: float = 1e-5,
    seed: int = 0,
    radius: float = 0.5,
) -> List[str]:
    """
    Check a problem against the standing assumptions

    q(x0) must be finite, g must stay above its zero minorant and the
    gradient must agree with finite differences at random probes around x0.

    Args:
        problem: Problem to check
        probes: Number of probe points
        rel_tol: Allowed relative gradient mismatch
        seed: Seed of the probe generator
        radius: Scale of the probe perturbations

    Returns:
        Descriptions of the failed checks, empty when the problem is valid
    """
    issues: List[str] = []
    if not np.isfinite(evaluate_q(problem, problem.x0)):
        issues.append("q(x0) is not finite")
    rng = SplitMix64(seed)
    for j in range(probes):
        probe = problem.x0 + radius * rng.normals(problem.dimension)
        g_value = problem.reg.value(probe)
        if g_value < 0:
            issues.append(f"probe {j}: g = {g_value!r} below its affine minorant 0")
        mismatch = gradient_check(problem.smooth, probe)
        if not mismatch <= rel_tol:
            issues.append(f"probe {j}: gradient mismatch {mismatch!r} > {rel_tol!r}")
    for issue in issues:
        logger.warning(f"{problem.name}: {issue}")
    return issues


def grid_search_l0(
    problem: CompositeProblem,
    step: float = 1e-3,
    half_width: float = 0.01,
    support: Optional[Sequence[int]] = None,
) -> float:
    """
    Exhaustive grid minimum of q around the center on a given support

    Only the kept coordinates are gridded; used to cross-check the oracle.
    """
    center, lam = _l0_data(problem)
    idx = list(range(center.size)) if support is None else list(support)
    offsets = np.arange(-half_width, half_width + step / 2, step)
    best = np.inf
    for combo in itertools.product(offsets, repeat=len(idx)):
        x = np.zeros_like(center)
        x[idx] = center[idx] + np.array(combo)
        best = min(best, evaluate_q(problem, x))
    return best
