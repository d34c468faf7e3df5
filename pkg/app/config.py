"""Application configuration management."""
from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseSettings, Field, validator


class Settings(BaseSettings):
    """Environment-driven estimator settings."""

    delta: float = Field(default=0.1, env="CAE_DELTA")
    lambda_: Optional[float] = Field(default=None, env="CAE_LAMBDA")
    kernel: str = Field(default="gaussian", env="CAE_KERNEL")
    sigma: Optional[float] = Field(default=None, env="CAE_SIGMA")
    dca_max_iter: int = Field(default=100, env="CAE_DCA_MAX_ITER")
    dca_rel_tol: float = Field(default=1e-6, env="CAE_DCA_REL_TOL")
    inner_max_iter: int = Field(default=200, env="CAE_INNER_MAX_ITER")
    inner_rel_tol: float = Field(default=1e-7, env="CAE_INNER_REL_TOL")
    cv_folds: int = Field(default=5, env="CAE_CV_FOLDS")
    seed: int = Field(default=0, env="CAE_SEED")
    bandwidth: float = Field(default=10.0, env="CAE_BANDWIDTH")
    bench_workers: int = Field(default=1, env="CAE_BENCH_WORKERS")
    log_level: str = Field(default="INFO", env="CAE_LOG_LEVEL")

    class Config:
        env_file = ".env"
        case_sensitive = True
        extra = "forbid"

    @validator("kernel")
    def _known_kernel(cls, value: str) -> str:
        if value not in {"gaussian", "linear"}:
            raise ValueError(f"Unknown kernel '{value}'; expected gaussian or linear.")
        return value

    @validator("delta", "bandwidth")
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be positive")
        return value

    @validator("lambda_")
    def _lambda_positive(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not value > 0:
            raise ValueError("lambda must be positive")
        return value


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return a cached settings instance."""

    return Settings()


def load_settings(config_path: Optional[Path] = None, **overrides: Any) -> Settings:
    """Build settings with precedence overrides > config file > environment > defaults.

    ``None`` overrides are ignored so callers can pass unset CLI flags through.
    """

    values: Dict[str, Any] = {}
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
        if not isinstance(payload, dict):
            raise ValueError(f"Config file {config_path} must contain a JSON object.")
        unknown = set(payload) - set(Settings.__fields__)
        if unknown:
            raise ValueError(f"Unknown config keys in {config_path}: {sorted(unknown)}")
        values.update(payload)

    values.update({key: value for key, value in overrides.items() if value is not None})
    return Settings(**values)
