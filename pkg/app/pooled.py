"""Covariate-free cut-point by exhaustive threshold search, and ROC points."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .dataset import Dataset

logger = logging.getLogger(__name__)

BOUNDARY_OFFSET = 1.0


@dataclass(frozen=True, slots=True)
class PooledEstimate:
    cut: float
    youden: float
    objective: float


def candidate_thresholds(x: np.ndarray) -> np.ndarray:
    """Midpoints of adjacent distinct values plus one candidate beyond each end."""

    values = np.unique(np.asarray(x, dtype=float))
    if values.size == 0:
        raise ValueError("No marker values to threshold.")
    mids = 0.5 * (values[:-1] + values[1:])
    return np.concatenate(([values[0] - BOUNDARY_OFFSET], mids, [values[-1] + BOUNDARY_OFFSET]))


def _rates(d: Dataset, thresholds: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sensitivity P(X >= c | +1) and specificity P(X < c | -1) at each threshold."""

    pos = np.sort(d.x[d.positives])
    neg = np.sort(d.x[d.negatives])
    sen = (pos.size - np.searchsorted(pos, thresholds, side="left")) / pos.size
    spe = np.searchsorted(neg, thresholds, side="left") / neg.size
    return sen, spe


def youden_at_threshold(d: Dataset, c: float) -> float:
    """Empirical sen + spe - 1 at threshold ``c`` (sign(0) = +1)."""

    d.require_both_classes()
    sen, spe = _rates(d, np.array([float(c)]))
    return float(sen[0] + spe[0] - 1.0)


def pooled_fit(d: Dataset) -> PooledEstimate:
    """Maximize the empirical pooled objective over candidate thresholds.

    Ties resolve to the lowest maximizing interval.
    """

    d.require_both_classes()
    thresholds = candidate_thresholds(d.x)
    sen, spe = _rates(d, thresholds)
    objective = 2.0 * sen + 2.0 * spe
    best = int(np.argmax(objective))
    estimate = PooledEstimate(
        cut=float(thresholds[best]),
        youden=float(objective[best] / 2.0 - 1.0),
        objective=float(objective[best]),
    )
    logger.debug("Pooled cut %.6g with Youden %.4f over %d candidates", estimate.cut, estimate.youden, thresholds.size)
    return estimate


def roc_points(d: Dataset) -> List[Tuple[float, float]]:
    """(1 - specificity, sensitivity) at every candidate threshold, ascending threshold."""

    return [(fpr, tpr) for _, fpr, tpr in roc_table(d)]


def roc_table(d: Dataset) -> List[Tuple[float, float, float]]:
    """(threshold, 1 - specificity, sensitivity) rows, ascending threshold."""

    d.require_both_classes()
    thresholds = candidate_thresholds(d.x)
    sen, spe = _rates(d, thresholds)
    return [(float(c), float(1.0 - s), float(t)) for c, s, t in zip(thresholds, spe, sen)]
