"""Pydantic schemas for configuration, model files and service payloads."""
from __future__ import annotations

import math
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, root_validator, validator

from .config import Settings


class KernelSpec(BaseModel):
    kind: Literal["gaussian", "linear"] = "gaussian"
    # None means "choose by median heuristic at fit time"
    sigma: Optional[float] = None

    @validator("sigma")
    def _finite_positive(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not (math.isfinite(value) and value > 0):
            raise ValueError("sigma must be finite and > 0")
        return value

    def resolved(self) -> bool:
        return self.kind == "linear" or self.sigma is not None

    class Config:
        frozen = True


class FitConfig(BaseModel):
    delta: float = 0.1
    lambda_: Optional[float] = Field(default=None, alias="lambda")
    lambda_grid: Optional[List[float]] = None
    cv_folds: Optional[int] = None
    kernel: KernelSpec = Field(default_factory=KernelSpec)
    dca_max_iter: int = 100
    dca_rel_tol: float = 1e-6
    inner_max_iter: int = 200
    inner_rel_tol: float = 1e-7
    seed: int = 0

    class Config:
        allow_population_by_field_name = True
        frozen = True

    @validator("delta", "dca_rel_tol", "inner_rel_tol")
    def _positive(cls, value: float) -> float:
        if not (math.isfinite(value) and value > 0):
            raise ValueError("must be finite and > 0")
        return value

    @validator("lambda_")
    def _lambda_positive(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not (math.isfinite(value) and value > 0):
            raise ValueError("lambda must be finite and > 0")
        return value

    @validator("dca_max_iter", "inner_max_iter")
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("iteration caps must be >= 1")
        return value

    @validator("cv_folds")
    def _folds(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 2:
            raise ValueError("cv_folds must be >= 2")
        return value

    @validator("lambda_grid")
    def _grid(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and (not value or any(not (math.isfinite(v) and v > 0) for v in value)):
            raise ValueError("lambda grid must be a non-empty list of positive values")
        return value

    @classmethod
    def from_settings(cls, settings: Settings, **overrides) -> "FitConfig":
        values = {
            "delta": settings.delta,
            "lambda_": settings.lambda_,
            "kernel": KernelSpec(kind=settings.kernel, sigma=settings.sigma),
            "dca_max_iter": settings.dca_max_iter,
            "dca_rel_tol": settings.dca_rel_tol,
            "inner_max_iter": settings.inner_max_iter,
            "inner_rel_tol": settings.inner_rel_tol,
            "seed": settings.seed,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def with_lambda(self, value: float) -> "FitConfig":
        return self.copy(update={"lambda_": value})


class SmootherConfig(BaseModel):
    h1: float = 10.0
    h_neg: float = 10.0
    density_kernel: Literal["gaussian"] = "gaussian"

    class Config:
        frozen = True

    @validator("h1", "h_neg")
    def _positive(cls, value: float) -> float:
        if not (math.isfinite(value) and value > 0):
            raise ValueError("bandwidths must be finite and > 0")
        return value

    @classmethod
    def tied(cls, h: float) -> "SmootherConfig":
        return cls(h1=h, h_neg=h)


class ModelFile(BaseModel):
    """On-disk JSON layout of a fitted cut-point function."""

    kernel: Literal["gaussian", "linear"]
    sigma: Optional[float] = None
    means: List[float] = Field(default_factory=list)
    scales: List[float] = Field(default_factory=list)
    b: float
    a: List[float] = Field(default_factory=list)
    profiles: List[List[float]] = Field(default_factory=list)
    delta: float = 0.1
    lambda_: Optional[float] = Field(default=None, alias="lambda")
    objective_trace: List[float] = Field(default_factory=list)
    covariate_names: List[str] = Field(default_factory=list)

    class Config:
        allow_population_by_field_name = True

    @root_validator(skip_on_failure=True)
    def _consistent(cls, values: dict) -> dict:
        a, profiles, means, scales = values["a"], values["profiles"], values["means"], values["scales"]
        if len(a) != len(profiles):
            raise ValueError(f"{len(a)} coefficients for {len(profiles)} stored profiles")
        if len(means) != len(scales):
            raise ValueError("means and scales differ in length")
        if any(len(row) != len(means) for row in profiles):
            raise ValueError("stored profiles do not match the standardizer dimension")
        return values


# ---------------------------------------------------------------------------
# Service payloads
# ---------------------------------------------------------------------------


class SamplePayload(BaseModel):
    x: float
    y: Literal[-1, 1]
    z: List[float] = Field(default_factory=list)


class DatasetPayload(BaseModel):
    samples: List[SamplePayload]
    covariate_names: List[str] = Field(default_factory=list)


class FitRequest(DatasetPayload):
    delta: Optional[float] = None
    lambda_: Optional[float] = Field(default=None, alias="lambda")
    cv_folds: Optional[int] = None
    kernel: Optional[KernelSpec] = None
    seed: Optional[int] = None

    class Config:
        allow_population_by_field_name = True


class PredictRequest(BaseModel):
    model: ModelFile
    zs: List[List[float]]


class CurveRequest(DatasetPayload):
    model: ModelFile
    zs: List[List[float]]
    h1: float = 10.0
    h_neg: float = 10.0


class CurvePoint(BaseModel):
    z: List[float]
    c_hat: float
    j_hat: float


class RocPoint(BaseModel):
    threshold: float
    fpr: float
    tpr: float


class PooledResponse(BaseModel):
    cut: float
    youden: float
    objective: float
    roc: List[RocPoint] = Field(default_factory=list)
