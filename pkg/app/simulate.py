"""Simulation designs with exact truth oracles for c(z) and J(z).

Examples 1 and 2 draw Z ~ Unif(1, 5); Examples 3 and 4 draw Z ~ N3((1,1,1), I)
and enter through s = z1 + z2 + z3 and q = z1^2 + z2^2 + z3^2. Y is a fair
coin on {-1, +1}. Examples 1 and 3 use normal class conditionals whose second
parameter is a variance; Examples 2 and 4 use Gamma(shape, scale) with the
square root of that variance as scale.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, validator
from scipy import optimize, stats

from .dataset import CsvSchema, Dataset, write_csv
from .special import gamma_cdf, gamma_pdf, gamma_sample, normal_cdf, normal_pdf

logger = logging.getLogger(__name__)

RESAMPLE_CAP = 1000
ROOT_XTOL = 1e-10
BRACKET_WIDTHS = 3.0


class OracleError(RuntimeError):
    """Raised when a truth oracle or generator cannot produce a value."""


class SimSpec(BaseModel):
    example_id: Literal[1, 2, 3, 4]
    n: int
    seed: int = 0

    @validator("n")
    def _at_least_two(cls, value: int) -> int:
        if value < 2:
            raise ValueError("n must be >= 2")
        return value

    class Config:
        frozen = True


# ---------------------------------------------------------------------------
# Design parameters
# ---------------------------------------------------------------------------

Family = Literal["normal", "gamma"]


def _uniform_design(z: np.ndarray) -> Tuple[np.ndarray, ...]:
    t = z[:, 0]
    base = 6.0 + 1.5 * t + 1.5 * np.sin(t)
    loc_neg = base
    loc_pos = base + 1.2 + np.sqrt(t - 0.5)
    var_neg = 0.4 + normal_cdf(2.0 * t - 6.0)
    var_pos = 1.2 + normal_cdf(2.0 * t - 6.0)
    return loc_pos, var_pos, loc_neg, var_neg


def _gaussian_design(z: np.ndarray) -> Tuple[np.ndarray, ...]:
    s = z.sum(axis=1)
    q = (z**2).sum(axis=1)
    base = 6.0 + 1.5 * q + 1.5 * np.sin(s)
    loc_neg = base
    loc_pos = base + 1.2 + np.sqrt(np.abs(s))
    var_neg = 0.4 + normal_cdf(2.0 * s - 6.0)
    var_pos = 1.2 + normal_cdf(2.0 * s - 6.0)
    return loc_pos, var_pos, loc_neg, var_neg


@dataclass(frozen=True, slots=True)
class TruthOracle:
    """Class-conditional marker distributions of one simulation design."""

    example_id: int
    p: int
    family: Family
    design: Callable[[np.ndarray], Tuple[np.ndarray, ...]]

    def as_rows(self, z) -> np.ndarray:
        rows = np.asarray(z, dtype=float)
        if rows.ndim <= 1:
            rows = rows.reshape(-1, self.p)
        if rows.shape[1] != self.p:
            raise ValueError(f"Example {self.example_id} expects p={self.p}, got {rows.shape[1]}.")
        return rows

    def parameters(self, y: int, z) -> Tuple[np.ndarray, np.ndarray]:
        """(mean, sd) for normal designs or (shape, scale) for gamma designs."""

        loc_pos, var_pos, loc_neg, var_neg = self.design(self.as_rows(z))
        loc, var = (loc_pos, var_pos) if y > 0 else (loc_neg, var_neg)
        return loc, np.sqrt(var)

    def valid(self, z) -> np.ndarray:
        ok = np.ones(self.as_rows(z).shape[0], dtype=bool)
        for y in (1, -1):
            first, second = self.parameters(y, z)
            ok &= np.isfinite(first) & np.isfinite(second) & (second > 0)
            if self.family == "gamma":
                ok &= first > 0
        return ok

    def mean_sd(self, y: int, z) -> Tuple[float, float]:
        first, second = (float(v[0]) for v in self.parameters(y, z))
        if self.family == "normal":
            return first, second
        return first * second, math.sqrt(first) * second

    def density(self, y: int, c, z) -> float:
        first, second = (float(v[0]) for v in self.parameters(y, z))
        if self.family == "normal":
            return normal_pdf(c, first, second)
        return gamma_pdf(c, first, second)

    def log_density(self, y: int, c: float, z) -> float:
        first, second = (float(v[0]) for v in self.parameters(y, z))
        if self.family == "normal":
            return float(stats.norm.logpdf(c, loc=first, scale=second))
        return float(stats.gamma.logpdf(c, a=first, scale=second))

    def cdf(self, y: int, c, z) -> float:
        first, second = (float(v[0]) for v in self.parameters(y, z))
        if self.family == "normal":
            return normal_cdf(c, first, second)
        return gamma_cdf(c, first, second)

    def sample_z(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.p == 1:
            return rng.uniform(1.0, 5.0, size=(size, 1))
        return rng.normal(1.0, 1.0, size=(size, self.p))

    def sample_x(self, rng: np.random.Generator, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        pos_first, pos_second = self.parameters(1, z)
        neg_first, neg_second = self.parameters(-1, z)
        first = np.where(y > 0, pos_first, neg_first)
        second = np.where(y > 0, pos_second, neg_second)
        if self.family == "normal":
            return rng.normal(first, second)
        return gamma_sample(rng, first, second)


_ORACLES: Dict[int, TruthOracle] = {
    1: TruthOracle(example_id=1, p=1, family="normal", design=_uniform_design),
    2: TruthOracle(example_id=2, p=1, family="gamma", design=_uniform_design),
    3: TruthOracle(example_id=3, p=3, family="normal", design=_gaussian_design),
    4: TruthOracle(example_id=4, p=3, family="gamma", design=_gaussian_design),
}


def oracle_for(example_id: int) -> TruthOracle:
    try:
        return _ORACLES[int(example_id)]
    except KeyError as exc:
        raise ValueError(f"Unknown example {example_id}; expected one of {sorted(_ORACLES)}.") from exc


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def generate(spec: SimSpec) -> Dataset:
    """Draw a dataset for ``spec``; identical seeds give identical datasets."""

    oracle = oracle_for(spec.example_id)
    rng = np.random.default_rng(spec.seed)
    z = oracle.sample_z(rng, spec.n)
    y = np.where(rng.random(spec.n) < 0.5, 1, -1)

    bad = np.flatnonzero(~oracle.valid(z))
    rounds = 0
    while bad.size:
        rounds += 1
        if rounds > RESAMPLE_CAP:
            raise OracleError(
                f"Example {spec.example_id}: {bad.size} covariate draws still invalid after {RESAMPLE_CAP} resamples."
            )
        z[bad] = oracle.sample_z(rng, bad.size)
        bad = bad[~oracle.valid(z[bad])]
    if rounds:
        logger.warning("Example %d: resampled invalid covariates over %d rounds", spec.example_id, rounds)

    x = oracle.sample_x(rng, y, z)
    return Dataset.from_arrays(x, y, z, covariate_names=CsvSchema.simulated(oracle.p).covariates)


def write_simulated(d: Dataset, path: Union[str, Path]) -> None:
    """CSV with columns x, y, z1..zp."""

    write_csv(d, path, CsvSchema.simulated(d.p))


# ---------------------------------------------------------------------------
# Truth
# ---------------------------------------------------------------------------


def _log_ratio(oracle: TruthOracle, z) -> Callable[[float], float]:
    def value(c: float) -> float:
        return oracle.log_density(1, c, z) - oracle.log_density(-1, c, z)

    return value


def true_cut(oracle: TruthOracle, z) -> float:
    """Point between the class means where the two class densities cross."""

    if not bool(oracle.valid(z)[0]):
        raise OracleError(f"Covariate profile {z!r} is outside the support of example {oracle.example_id}.")
    mean_pos, sd_pos = oracle.mean_sd(1, z)
    mean_neg, sd_neg = oracle.mean_sd(-1, z)
    f = _log_ratio(oracle, z)

    lo, hi = min(mean_pos, mean_neg), max(mean_pos, mean_neg)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if not (np.sign(f_lo) * np.sign(f_hi) < 0):
        pad = BRACKET_WIDTHS * math.sqrt(0.5 * (sd_pos**2 + sd_neg**2))
        lo, hi = lo - pad, hi + pad
        if oracle.family == "gamma":
            lo = max(lo, 1e-12)
        f_lo, f_hi = f(lo), f(hi)
        if not (np.isfinite(f_lo) and np.isfinite(f_hi) and np.sign(f_lo) * np.sign(f_hi) < 0):
            raise OracleError(f"No sign change of the density difference near z={z!r} (example {oracle.example_id}).")
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    return float(optimize.brentq(f, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200))


def true_youden(oracle: TruthOracle, z) -> float:
    """F_neg(c*) - F_pos(c*) at the true cut-point."""

    c = true_cut(oracle, z)
    return float(oracle.cdf(-1, c, z) - oracle.cdf(1, c, z))


def true_cut_many(oracle: TruthOracle, zs) -> np.ndarray:
    rows = oracle.as_rows(zs)
    return np.array([true_cut(oracle, row) for row in rows])


def true_youden_many(oracle: TruthOracle, zs) -> np.ndarray:
    rows = oracle.as_rows(zs)
    return np.array([true_youden(oracle, row) for row in rows])
