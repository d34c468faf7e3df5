"""The 0-1 loss, the psi-delta surrogate, its DC parts, and population risks."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, optimize

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

DEFAULT_DELTA = 0.1


@dataclass(frozen=True, slots=True)
class PsiDelta:
    delta: float = DEFAULT_DELTA

    def __post_init__(self) -> None:
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be finite and > 0, got {self.delta!r}")


def _out(value: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(value) if np.ndim(like) == 0 else value


def loss_01(u: ArrayLike) -> ArrayLike:
    """0 if u >= 0 else 1 (sign(0) = +1)."""

    arr = np.asarray(u, dtype=float)
    return _out(np.where(arr >= 0, 0.0, 1.0), u)


def loss_psi(L: PsiDelta, u: ArrayLike) -> ArrayLike:
    """min((delta - u)_+ / delta, 1)."""

    arr = np.asarray(u, dtype=float)
    g1, g2 = dc_parts(L, arr)
    return _out(g1 - g2, u)


def dc_parts(L: PsiDelta, u: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """Convex parts g1 = (delta - u)_+/delta and g2 = (-u)_+/delta with g1 - g2 = loss_psi."""

    arr = np.asarray(u, dtype=float)
    delta = L.delta
    g1 = np.maximum(delta - arr, 0.0) / delta
    g2 = np.maximum(-arr, 0.0) / delta
    # On u <= 0 snap the pair onto (t, t - 1) with t = fl(g2 + 1) so that
    # g1 - g2 is exactly 1 in floating point.
    capped = arr <= 0
    t = g2 + 1.0
    g1 = np.where(capped, t, g1)
    g2 = np.where(capped, t - 1.0, g2)
    return _out(g1, u), _out(g2, u)


def subgrad_g2(L: PsiDelta, u: ArrayLike) -> ArrayLike:
    """Chosen subgradient of (-u)_+/delta: -1/delta for u < 0, else 0."""

    arr = np.asarray(u, dtype=float)
    return _out(np.where(arr < 0, -1.0 / L.delta, 0.0), u)


def subgrad_g1(L: PsiDelta, u: ArrayLike) -> ArrayLike:
    """Chosen subgradient of (delta - u)_+/delta: -1/delta for u < delta, else 0."""

    arr = np.asarray(u, dtype=float)
    return _out(np.where(arr < L.delta, -1.0 / L.delta, 0.0), u)


# ---------------------------------------------------------------------------
# Population-level risks
# ---------------------------------------------------------------------------


def expected_weighted_risk(
    c: float,
    pos,
    neg,
    pi: float,
    loss: Callable[[ArrayLike], ArrayLike],
    kinks: Sequence[float] = (0.0,),
) -> float:
    """E[w(Y) L(Y (X - c))] for frozen scipy class-conditional laws ``pos``/``neg``.

    With w(1) = 1/pi and w(-1) = 1/(1 - pi) the prevalence cancels and the
    risk is the sum of the two class-conditional expected losses.
    """

    if not 0 < pi < 1:
        raise ValueError(f"pi must lie in (0, 1), got {pi}")

    def _class_term(dist, sign: int) -> float:
        lo, hi = dist.ppf(1e-12), dist.isf(1e-12)
        breaks = [c + sign * k for k in kinks]
        points = [x for x in breaks if lo < x < hi] or None
        value, _ = integrate.quad(
            lambda x: loss(sign * (x - c)) * dist.pdf(x),
            lo,
            hi,
            points=points,
            limit=200,
        )
        return value

    return pi * (1.0 / pi) * _class_term(pos, 1) + (1 - pi) * (1.0 / (1 - pi)) * _class_term(neg, -1)


def population_minimizer(
    pos,
    neg,
    pi: float,
    delta: float,
    bounds: Tuple[float, float],
    grid_size: int = 121,
) -> float:
    """argmin over constant c of the expected weighted psi-delta risk."""

    L = PsiDelta(delta)

    def risk(c: float) -> float:
        return expected_weighted_risk(c, pos, neg, pi, lambda u: loss_psi(L, u), kinks=(0.0, delta))

    lo, hi = bounds
    grid = np.linspace(lo, hi, grid_size)
    values = np.array([risk(c) for c in grid])
    best = int(np.argmin(values))
    left = grid[max(best - 1, 0)]
    right = grid[min(best + 1, grid_size - 1)]
    result = optimize.minimize_scalar(risk, bounds=(left, right), method="bounded", options={"xatol": 1e-9})
    c_star = float(result.x) if result.fun <= values[best] else float(grid[best])
    logger.debug("Population psi risk minimizer at delta=%g: c=%.8f", delta, c_star)
    return c_star
