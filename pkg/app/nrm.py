"""Normal regression model baseline: per-class linear means, homoscedastic normal errors."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .dataset import Dataset
from .special import normal_cdf

logger = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-12


class NrmError(RuntimeError):
    """Raised when the normal regression baseline cannot be fitted."""


@dataclass(frozen=True, slots=True)
class NrmModel:
    beta_pos: np.ndarray
    beta_neg: np.ndarray
    sigma_pos: float
    sigma_neg: float

    def __post_init__(self) -> None:
        if not (self.sigma_pos > 0 and self.sigma_neg > 0):
            raise NrmError("Residual standard deviations must be positive.")

    def means(self, z) -> Tuple[float, float]:
        """(mu_pos(z), mu_neg(z))."""

        design = np.concatenate(([1.0], np.asarray(z, dtype=float).reshape(-1)))
        if design.shape[0] != self.beta_pos.shape[0]:
            raise ValueError(f"Expected {self.beta_pos.shape[0] - 1} covariates, got {design.shape[0] - 1}.")
        return float(design @ self.beta_pos), float(design @ self.beta_neg)


def _fit_class(x: np.ndarray, z: np.ndarray, label: str) -> Tuple[np.ndarray, float]:
    n, p = z.shape
    if n < p + 2:
        raise NrmError(f"Class {label} has {n} samples; at least {p + 2} are needed.")
    design = np.column_stack([np.ones(n), z])
    if np.linalg.matrix_rank(design) < p + 1:
        raise NrmError(f"Design matrix for class {label} is rank deficient.")
    beta, _, _, _ = np.linalg.lstsq(design, x, rcond=None)
    residuals = x - design @ beta
    sigma = math.sqrt(float(residuals @ residuals) / (n - p - 1))
    if sigma <= SIGMA_FLOOR * max(1.0, float(np.abs(x).max())):
        raise NrmError(f"Class {label} is fitted exactly; residual standard deviation is zero.")
    return beta, sigma


def nrm_fit(d: Dataset) -> NrmModel:
    """Least-squares fit of x on (1, z) within each class."""

    d.require_both_classes()
    pos, neg = d.positives, d.negatives
    beta_pos, sigma_pos = _fit_class(d.x[pos], d.z[pos], "+1")
    beta_neg, sigma_neg = _fit_class(d.x[neg], d.z[neg], "-1")
    logger.debug("NRM fit: sigma_pos=%.4g sigma_neg=%.4g", sigma_pos, sigma_neg)
    return NrmModel(beta_pos=beta_pos, beta_neg=beta_neg, sigma_pos=sigma_pos, sigma_neg=sigma_neg)


def density_crossing(mu_pos: float, sigma_pos: float, mu_neg: float, sigma_neg: float) -> float:
    """Point where the two normal densities are equal, between the means when possible."""

    midpoint = 0.5 * (mu_pos + mu_neg)
    if sigma_pos == sigma_neg:
        return midpoint

    # log f_pos(c) = log f_neg(c) rearranged as A c^2 + B c + C = 0
    A = 0.5 / sigma_neg**2 - 0.5 / sigma_pos**2
    B = mu_pos / sigma_pos**2 - mu_neg / sigma_neg**2
    C = 0.5 * mu_neg**2 / sigma_neg**2 - 0.5 * mu_pos**2 / sigma_pos**2 + math.log(sigma_neg / sigma_pos)
    roots = [float(r.real) for r in np.roots([A, B, C]) if abs(r.imag) < 1e-12]
    if not roots:
        return midpoint
    lo, hi = min(mu_pos, mu_neg), max(mu_pos, mu_neg)
    inside = [r for r in roots if lo <= r <= hi]
    pool = inside or roots
    root = min(pool, key=lambda r: abs(r - midpoint))
    return _polish(root, mu_pos, sigma_pos, mu_neg, sigma_neg)


def _polish(c: float, mu_pos: float, sigma_pos: float, mu_neg: float, sigma_neg: float) -> float:
    """Newton steps on the log-density difference."""

    for _ in range(3):
        g = (
            -0.5 * ((c - mu_pos) / sigma_pos) ** 2
            - math.log(sigma_pos)
            + 0.5 * ((c - mu_neg) / sigma_neg) ** 2
            + math.log(sigma_neg)
        )
        dg = -(c - mu_pos) / sigma_pos**2 + (c - mu_neg) / sigma_neg**2
        if dg == 0 or not math.isfinite(g):
            break
        step = g / dg
        c -= step
        if abs(step) < 1e-15 * max(1.0, abs(c)):
            break
    return c


def nrm_cut(m: NrmModel, z) -> float:
    mu_pos, mu_neg = m.means(z)
    return density_crossing(mu_pos, m.sigma_pos, mu_neg, m.sigma_neg)


def nrm_youden(m: NrmModel, z) -> float:
    """Phi((c - mu_neg)/sigma_neg) - Phi((c - mu_pos)/sigma_pos) at the NRM cut."""

    mu_pos, mu_neg = m.means(z)
    c = density_crossing(mu_pos, m.sigma_pos, mu_neg, m.sigma_neg)
    return float(normal_cdf((c - mu_neg) / m.sigma_neg) - normal_cdf((c - mu_pos) / m.sigma_pos))
