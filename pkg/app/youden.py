"""Kernel-smoothed covariate-adjusted Youden index."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.stats import norm

from .dataset import Dataset
from .model import SmootherConfig

logger = logging.getLogger(__name__)

UNDERFLOW_FLOOR = 1e-300


class SupportError(RuntimeError):
    """Raised when a query point has no kernel mass in one of the classes."""


def default_bandwidth_grid() -> List[float]:
    """{10^((s - 31)/10) : s = 1..41}."""

    return [10.0 ** ((s - 31) / 10.0) for s in range(1, 42)]


def _kernel_weights(profiles: np.ndarray, queries: np.ndarray, h: float) -> np.ndarray:
    """Product gaussian K_h(z_i - z) with common bandwidth, shape (queries, profiles)."""

    p = profiles.shape[1]
    if p == 0:
        return np.ones((queries.shape[0], profiles.shape[0]))
    scaled = (profiles[None, :, :] - queries[:, None, :]) / h
    return np.prod(norm.pdf(scaled) / h, axis=2)


def _conditional_cdf(x: np.ndarray, weights: np.ndarray, c_hats: np.ndarray) -> np.ndarray:
    denom = weights.sum(axis=1)
    if np.any(denom < UNDERFLOW_FLOOR):
        raise SupportError("query point outside covariate support")
    below = (x[None, :] <= c_hats[:, None]).astype(float)
    return (weights * below).sum(axis=1) / denom


def youden_many(d: Dataset, c_hats: Sequence[float], zs, cfg: SmootherConfig) -> np.ndarray:
    """Smoothed J(z) for each query row, control CDF minus case CDF at c_hat(z)."""

    d.require_both_classes()
    queries = np.asarray(zs, dtype=float)
    if queries.ndim == 1:
        queries = queries.reshape(-1, d.p)
    if queries.shape[1] != d.p:
        raise ValueError(f"Query points have p={queries.shape[1]}, dataset has p={d.p}.")
    cuts = np.asarray(c_hats, dtype=float).reshape(-1)
    if cuts.shape[0] != queries.shape[0]:
        raise ValueError(f"{cuts.shape[0]} cut-points for {queries.shape[0]} query points.")

    neg, pos = d.negatives, d.positives
    control = _conditional_cdf(d.x[neg], _kernel_weights(d.z[neg], queries, cfg.h_neg), cuts)
    case = _conditional_cdf(d.x[pos], _kernel_weights(d.z[pos], queries, cfg.h1), cuts)
    return control - case


def youden_at(d: Dataset, c_hat: float, z, cfg: SmootherConfig) -> float:
    """Smoothed J at a single covariate profile ``z``."""

    query = np.asarray(z, dtype=float).reshape(1, -1)
    return float(youden_many(d, [c_hat], query, cfg)[0])


@dataclass(frozen=True, slots=True)
class CurveRow:
    z: tuple
    c_hat: float
    j_hat: float


def youden_curve(d: Dataset, model, query_zs, cfg: SmootherConfig) -> List[CurveRow]:
    """Evaluate c_hat(z) and J_hat(z) over query profiles, sorted by first coordinate."""

    queries = np.asarray(query_zs, dtype=float)
    if queries.ndim == 1:
        queries = queries.reshape(-1, d.p)
    c_hats = model.predict(queries)
    j_hats = youden_many(d, c_hats, queries, cfg)
    order = np.argsort(queries[:, 0], kind="stable") if d.p > 0 else np.arange(queries.shape[0])
    rows = [
        CurveRow(z=tuple(float(v) for v in queries[i]), c_hat=float(c_hats[i]), j_hat=float(j_hats[i]))
        for i in order
    ]
    logger.debug("Evaluated Youden curve at %d query points", len(rows))
    return rows
