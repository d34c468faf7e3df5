"""Workflows shared by the command line and the HTTP service."""
from __future__ import annotations

import logging
from typing import Iterable, List, Optional

import numpy as np

from .cae import CaeModel, dca_fit
from .config import Settings, get_settings
from .dataset import Dataset, pima_filter
from .model import FitConfig, KernelSpec, SmootherConfig
from .pooled import PooledEstimate, pooled_fit, roc_table
from .youden import CurveRow, youden_curve

logger = logging.getLogger(__name__)

PIMA_AGE_GRID = tuple(float(age) for age in range(22, 60))
PIMA_DELTA = 0.1


class CutpointService:
    """Fit, evaluate and summarize covariate-adjusted cut-points."""

    def __init__(self, settings: Optional[Settings] = None) -> None:
        self.settings = settings or get_settings()

    # ------------------------------------------------------------------
    # Estimation
    # ------------------------------------------------------------------
    def fit_config(
        self,
        lambda_: Optional[float] = None,
        cv_folds: Optional[int] = None,
        delta: Optional[float] = None,
        kernel: Optional[KernelSpec] = None,
        seed: Optional[int] = None,
    ) -> FitConfig:
        """Explicit lambda wins over CV; explicit folds win over a lambda from settings."""

        if lambda_ is None and cv_folds is None:
            lambda_ = self.settings.lambda_
        if lambda_ is None and cv_folds is None:
            cv_folds = self.settings.cv_folds
        base = FitConfig.from_settings(self.settings, delta=delta, kernel=kernel, seed=seed)
        values = base.dict()
        values.update(lambda_=lambda_, cv_folds=None if lambda_ is not None else cv_folds)
        return FitConfig(**values)

    def fit(self, dataset: Dataset, **options) -> CaeModel:
        cfg = self.fit_config(**options)
        logger.info(
            "Fitting cut-point function on %d samples (lambda=%s, cv_folds=%s)",
            dataset.n,
            cfg.lambda_,
            cfg.cv_folds,
        )
        return dca_fit(dataset, cfg)

    def curve(
        self,
        dataset: Dataset,
        model: CaeModel,
        query_zs,
        h1: Optional[float] = None,
        h_neg: Optional[float] = None,
    ) -> List[CurveRow]:
        smoother = SmootherConfig(
            h1=h1 if h1 is not None else self.settings.bandwidth,
            h_neg=h_neg if h_neg is not None else self.settings.bandwidth,
        )
        return youden_curve(dataset, model, query_zs, smoother)

    def pooled(self, dataset: Dataset) -> PooledEstimate:
        return pooled_fit(dataset)

    def roc(self, dataset: Dataset):
        return roc_table(dataset)

    # ------------------------------------------------------------------
    # Pima age-adjusted workflow
    # ------------------------------------------------------------------
    def pima(
        self,
        dataset: Dataset,
        age_grid: Iterable[float] = PIMA_AGE_GRID,
        cv_folds: Optional[int] = None,
        seed: Optional[int] = None,
        bandwidth: Optional[float] = None,
    ) -> List[CurveRow]:
        """Filter, fit with delta = 0.1 and CV lambda, then evaluate c(age) and J(age)."""

        filtered = pima_filter(dataset)
        model = self.fit(
            filtered,
            cv_folds=cv_folds or self.settings.cv_folds,
            delta=PIMA_DELTA,
            seed=seed,
        )
        ages = np.asarray(list(age_grid), dtype=float).reshape(-1, 1)
        h = bandwidth if bandwidth is not None else self.settings.bandwidth
        rows = self.curve(filtered, model, ages, h1=h, h_neg=h)
        logger.info("Pima curve evaluated over %d ages with lambda=%.4g", len(rows), model.lambda_)
        return rows
