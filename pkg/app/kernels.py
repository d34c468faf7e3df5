"""Kernel functions, Gram matrices, standardization and RKHS function evaluation."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist
from sklearn.metrics.pairwise import linear_kernel, rbf_kernel

from .model import KernelSpec

logger = logging.getLogger(__name__)

SCALE_FLOOR = 1e-12


class KernelError(ValueError):
    """Raised for invalid kernel inputs or degenerate covariates."""


def _as_profiles(profiles) -> np.ndarray:
    arr = np.asarray(profiles, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if arr.size else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise KernelError(f"Profiles must be a 2-D array, got shape {arr.shape}.")
    return arr


def _check_kernel(kernel: KernelSpec) -> None:
    if kernel.kind == "gaussian" and kernel.sigma is None:
        raise KernelError("Gaussian kernel needs a resolved sigma.")


def cross_gram(profiles, queries, kernel: KernelSpec) -> np.ndarray:
    """Return the matrix K(profiles_i, queries_j)."""

    _check_kernel(kernel)
    left = _as_profiles(profiles)
    right = _as_profiles(queries)
    if left.shape[1] != right.shape[1]:
        raise KernelError(f"Dimension mismatch: profiles have p={left.shape[1]}, queries p={right.shape[1]}.")

    if left.shape[1] == 0:
        fill = 1.0 if kernel.kind == "gaussian" else 0.0
        return np.full((left.shape[0], right.shape[0]), fill)

    if kernel.kind == "gaussian":
        return rbf_kernel(left, right, gamma=1.0 / (2.0 * kernel.sigma**2))
    return linear_kernel(left, right)


def gram(profiles, kernel: KernelSpec) -> np.ndarray:
    """Symmetric Gram matrix over ``profiles``."""

    mat = cross_gram(profiles, profiles, kernel)
    # rbf_kernel leaves tiny asymmetries from the distance expansion
    mat = 0.5 * (mat + mat.T)
    if kernel.kind == "gaussian":
        np.fill_diagonal(mat, 1.0)
    return mat


def median_heuristic(profiles) -> float:
    """Median pairwise Euclidean distance over distinct pairs, zeros excluded."""

    arr = _as_profiles(profiles)
    if arr.shape[0] < 2:
        raise KernelError("Median heuristic needs at least two profiles.")
    if arr.shape[1] == 0:
        raise KernelError("Median heuristic is undefined without covariates.")
    distances = pdist(arr)
    distances = distances[distances > 0]
    if distances.size == 0:
        raise KernelError("All profiles are identical; median heuristic is degenerate.")
    return float(np.median(distances))


def resolve_kernel(kernel: KernelSpec, profiles) -> KernelSpec:
    """Fill in sigma by the median heuristic when it was left unset."""

    if kernel.resolved():
        return kernel
    arr = _as_profiles(profiles)
    if arr.shape[1] == 0:
        # No covariates: every gaussian entry is 1 whatever sigma is.
        return KernelSpec(kind=kernel.kind, sigma=1.0)
    sigma = median_heuristic(arr)
    logger.debug("Median heuristic bandwidth sigma=%.6g over %d profiles", sigma, arr.shape[0])
    return KernelSpec(kind=kernel.kind, sigma=sigma)


@dataclass(frozen=True, slots=True)
class Standardizer:
    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self) -> None:
        means = np.asarray(self.means, dtype=float).reshape(-1)
        scales = np.asarray(self.scales, dtype=float).reshape(-1)
        if means.shape != scales.shape:
            raise KernelError("Standardizer means and scales differ in length.")
        if np.any(~np.isfinite(scales)) or np.any(scales < SCALE_FLOOR):
            raise KernelError(f"Standardizer scales must be >= {SCALE_FLOOR}, got {scales.tolist()}.")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "scales", scales)

    @classmethod
    def fit(cls, z) -> "Standardizer":
        arr = _as_profiles(z)
        if arr.shape[1] == 0:
            return cls(means=np.zeros(0), scales=np.ones(0))
        if arr.shape[0] < 2:
            raise KernelError("Standardization needs at least two profiles.")
        scales = arr.std(axis=0, ddof=1)
        if np.any(scales < SCALE_FLOOR):
            raise KernelError(f"Covariate column(s) {np.flatnonzero(scales < SCALE_FLOOR).tolist()} are constant.")
        return cls(means=arr.mean(axis=0), scales=scales)

    @property
    def p(self) -> int:
        return int(self.means.shape[0])

    def transform(self, z) -> np.ndarray:
        arr = _as_profiles(z)
        if arr.shape[1] != self.p:
            raise KernelError(f"Dimension mismatch: expected p={self.p}, got {arr.shape[1]}.")
        return (arr - self.means) / self.scales

    def inverse_transform(self, z) -> np.ndarray:
        arr = _as_profiles(z)
        if arr.shape[1] != self.p:
            raise KernelError(f"Dimension mismatch: expected p={self.p}, got {arr.shape[1]}.")
        return arr * self.scales + self.means


@dataclass(frozen=True, slots=True)
class RkhsFunction:
    """c(z) = b + sum_i a_i K(z_i, z) over stored (standardized) profiles."""

    a: np.ndarray
    b: float
    profiles: np.ndarray
    kernel: KernelSpec

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float).reshape(-1)
        profiles = _as_profiles(self.profiles)
        if a.shape[0] != profiles.shape[0]:
            raise KernelError(f"{a.shape[0]} coefficients for {profiles.shape[0]} stored profiles.")
        _check_kernel(self.kernel)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "profiles", profiles)
        object.__setattr__(self, "b", float(self.b))

    @property
    def p(self) -> int:
        return int(self.profiles.shape[1])


def evaluate_many(f: RkhsFunction, zs, cross: Optional[np.ndarray] = None) -> np.ndarray:
    """Evaluate ``f`` at each row of ``zs`` (already standardized)."""

    queries = _as_profiles(zs)
    if queries.shape[1] != f.p:
        raise KernelError(f"Dimension mismatch: function has p={f.p}, query has p={queries.shape[1]}.")
    if f.a.size == 0:
        return np.full(queries.shape[0], f.b)
    mat = cross if cross is not None else cross_gram(f.profiles, queries, f.kernel)
    return f.b + f.a @ mat


def evaluate(f: RkhsFunction, z) -> float:
    """Exact representer evaluation at a single standardized profile."""

    query = np.asarray(z, dtype=float).reshape(1, -1)
    return float(evaluate_many(f, query)[0])


def rkhs_norm_sq(f: RkhsFunction, gram_matrix: np.ndarray) -> float:
    """Squared RKHS norm a^T K a (the offset does not contribute)."""

    mat = np.asarray(gram_matrix, dtype=float)
    if mat.shape != (f.a.shape[0], f.a.shape[0]):
        raise KernelError(f"Gram shape {mat.shape} does not match {f.a.shape[0]} coefficients.")
    value = float(f.a @ mat @ f.a)
    return max(value, 0.0)
