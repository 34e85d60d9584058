"""Closed-form proximal operators and the prox-gradient subproblem

All prox maps take a weight w and return a minimizer of
w*g(x) + 0.5*||x - v||^2. The subproblem of an iteration with curvature gamma
is therefore a single prox call with w = 1/gamma.
"""

import logging
from typing import Sequence, Union

import numpy as np

from .errors import ContractViolation, SolverAbort
from .models import Regularizer

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[float], float]


def prox_l1(v: ArrayLike, w: float) -> np.ndarray:
    """Soft-thresholding: sign(v) * max(|v| - w, 0)"""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - w, 0.0)


def prox_l0(v: ArrayLike, w: float) -> np.ndarray:
    """
    Hard-thresholding selection of the l0 prox

    Keeps v_i when v_i**2 / 2 > w and zeroes it otherwise, so the tie
    v_i**2 / 2 == w resolves to 0.
    """
    v = np.asarray(v, dtype=float)
    return np.where(0.5 * v * v > w, v, 0.0)


def project_box(v: ArrayLike, lo: ArrayLike, hi: ArrayLike) -> np.ndarray:
    """
    Euclidean projection onto the box [lo, hi]

    Raises:
        ContractViolation: If lo_i > hi_i for some i
    """
    v = np.asarray(v, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), v.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), v.shape)
    if np.any(lo > hi):
        raise ContractViolation("box bounds must satisfy lo <= hi componentwise")
    return np.clip(v, lo, hi)


# Regularizers shipped with the library


def zero_regularizer() -> Regularizer:
    return Regularizer(
        value=lambda x: 0.0,
        prox=lambda v, w: np.array(v, dtype=float),
        name="zero",
        minorant="0",
    )


def l1_regularizer(lam: float) -> Regularizer:
    """g = lam * ||x||_1, affine minorant 0"""
    if lam <= 0:
        raise ContractViolation("l1 weight must be positive; use zero_regularizer for lam = 0")
    return Regularizer(
        value=lambda x: lam * float(np.sum(np.abs(x))),
        prox=lambda v, w: prox_l1(v, w * lam),
        name=f"l1(lam={lam!r})",
        minorant="0",
    )


def l0_regularizer(lam: float) -> Regularizer:
    """g = lam * ||x||_0, affine minorant 0"""
    if lam < 0:
        raise ContractViolation("l0 weight must be nonnegative")
    if lam == 0:
        return zero_regularizer()
    return Regularizer(
        value=lambda x: lam * float(np.count_nonzero(x)),
        prox=lambda v, w: prox_l0(v, w * lam),
        name=f"l0(lam={lam!r})",
        minorant="0",
    )


def box_indicator(lo: ArrayLike, hi: ArrayLike) -> Regularizer:
    """Indicator of [lo, hi]: 0 inside, +inf outside; affine minorant 0"""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ContractViolation("box bounds must satisfy lo <= hi componentwise")

    def value(x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return 0.0 if np.all((x >= lo) & (x <= hi)) else np.inf

    return Regularizer(
        value=value,
        prox=lambda v, w: project_box(v, lo, hi),
        name="box",
        minorant="0",
    )


def subproblem_solve(
    x: np.ndarray,
    grad: np.ndarray,
    gamma: float,
    reg: Regularizer,
) -> np.ndarray:
    """
    Solve min <grad, y - x> + gamma/2 ||y - x||^2 + g(y)

    Completing the square turns the subproblem into prox_g(x - grad/gamma)
    with weight 1/gamma.

    Args:
        x: Current iterate
        grad: Gradient of f at x
        gamma: Positive curvature of the quadratic model
        reg: Regularizer providing the prox selection

    Returns:
        A global minimizer of the subproblem

    Raises:
        ContractViolation: If gamma is not positive
        SolverAbort: If the prox returns a nonfinite point
    """
    if not gamma > 0:
        raise ContractViolation(f"gamma must be positive, got {gamma}")
    with np.errstate(over="ignore", invalid="ignore"):
        v = x - grad / gamma
        y = np.asarray(reg.prox(v, 1.0 / gamma), dtype=float)
    if not np.all(np.isfinite(y)):
        logger.error(f"Prox of {reg.name} returned a nonfinite point at gamma={gamma!r}")
        raise SolverAbort(
            "prox returned a nonfinite point",
            diagnostic=f"regularizer={reg.name} gamma={gamma!r} max|v|={np.max(np.abs(v))!r}",
        )
    return y
