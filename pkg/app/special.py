"""Normal and gamma distribution functions used by the simulation designs."""
from __future__ import annotations

from typing import Union

import numpy as np
from scipy import special, stats

ArrayLike = Union[float, np.ndarray]


class SpecialFunctionError(ValueError):
    """Raised for invalid distribution parameters."""


def _check_positive(name: str, value: ArrayLike) -> None:
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise SpecialFunctionError(f"{name} must be finite and > 0, got {value!r}")


def _out(value, like: ArrayLike) -> ArrayLike:
    return float(value) if np.ndim(like) == 0 else np.asarray(value)


def normal_pdf(x: ArrayLike, mean: ArrayLike = 0.0, sd: ArrayLike = 1.0) -> ArrayLike:
    _check_positive("sd", sd)
    return _out(stats.norm.pdf(x, loc=mean, scale=sd), x)


def normal_cdf(x: ArrayLike, mean: ArrayLike = 0.0, sd: ArrayLike = 1.0) -> ArrayLike:
    _check_positive("sd", sd)
    return _out(special.ndtr((np.asarray(x, dtype=float) - mean) / sd), x)


def gamma_pdf(x: ArrayLike, shape: ArrayLike, scale: ArrayLike) -> ArrayLike:
    _check_positive("shape", shape)
    _check_positive("scale", scale)
    return _out(stats.gamma.pdf(x, a=shape, scale=scale), x)


def gamma_cdf(x: ArrayLike, shape: ArrayLike, scale: ArrayLike) -> ArrayLike:
    """Regularized lower incomplete gamma P(shape, x/scale); 0 for x <= 0."""

    _check_positive("shape", shape)
    _check_positive("scale", scale)
    arr = np.asarray(x, dtype=float)
    value = special.gammainc(shape, np.maximum(arr, 0.0) / scale)
    return _out(value, x)


def gamma_sample(rng: np.random.Generator, shape: ArrayLike, scale: ArrayLike) -> ArrayLike:
    """Draw Gamma(shape, scale) variates with numpy's squeeze-rejection sampler."""

    _check_positive("shape", shape)
    _check_positive("scale", scale)
    return rng.gamma(shape, scale)
