"""FastAPI application entrypoint."""
from __future__ import annotations

import io
import logging
from typing import Callable, List, TypeVar

import numpy as np
from fastapi import Depends, FastAPI, HTTPException, Query
from fastapi.encoders import jsonable_encoder
from fastapi.responses import JSONResponse, StreamingResponse

from .cae import model_from_file
from .config import Settings, get_settings
from .dataset import CsvSchema, Dataset, LabeledSample, write_csv
from .model import CurvePoint, CurveRequest, DatasetPayload, FitRequest, PooledResponse, PredictRequest, RocPoint
from .service import CutpointService
from .simulate import SimSpec, generate

logger = logging.getLogger(__name__)

app = FastAPI(title="Covariate-adjusted cut-point service", version="0.1.0")

T = TypeVar("T")


def get_cutpoint_service(settings: Settings = Depends(get_settings)) -> CutpointService:
    return CutpointService(settings=settings)


def _guarded(action: Callable[[], T]) -> T:
    try:
        return action()
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except RuntimeError as exc:
        logger.exception("Computation failed")
        raise HTTPException(status_code=500, detail=str(exc)) from exc


def _dataset(payload: DatasetPayload) -> Dataset:
    samples = [LabeledSample(x=s.x, y=s.y, z=tuple(s.z)) for s in payload.samples]
    return Dataset.from_samples(samples, covariate_names=payload.covariate_names)


@app.get("/health")
def health(settings: Settings = Depends(get_settings)) -> dict:
    return {
        "status": "ok",
        "delta": settings.delta,
        "kernel": settings.kernel,
        "cv_folds": settings.cv_folds,
    }


@app.post("/pooled")
def pooled(payload: DatasetPayload, service: CutpointService = Depends(get_cutpoint_service)) -> JSONResponse:
    def run() -> PooledResponse:
        d = _dataset(payload)
        estimate = service.pooled(d)
        roc = [RocPoint(threshold=c, fpr=fpr, tpr=tpr) for c, fpr, tpr in service.roc(d)]
        return PooledResponse(cut=estimate.cut, youden=estimate.youden, objective=estimate.objective, roc=roc)

    return JSONResponse(content=jsonable_encoder(_guarded(run)))


@app.post("/fit")
def fit(payload: FitRequest, service: CutpointService = Depends(get_cutpoint_service)) -> JSONResponse:
    def run():
        model = service.fit(
            _dataset(payload),
            lambda_=payload.lambda_,
            cv_folds=payload.cv_folds,
            delta=payload.delta,
            kernel=payload.kernel,
            seed=payload.seed,
        )
        return model.to_file().dict(by_alias=True)

    return JSONResponse(content=jsonable_encoder(_guarded(run)))


@app.post("/predict")
def predict(payload: PredictRequest) -> JSONResponse:
    def run() -> List[float]:
        model = model_from_file(payload.model)
        return model.predict(np.asarray(payload.zs, dtype=float)).tolist()

    return JSONResponse(content={"c_hat": _guarded(run)})


@app.post("/youden-curve")
def youden_curve(payload: CurveRequest, service: CutpointService = Depends(get_cutpoint_service)) -> JSONResponse:
    def run() -> List[CurvePoint]:
        d = _dataset(payload)
        rows = service.curve(d, model_from_file(payload.model), payload.zs, h1=payload.h1, h_neg=payload.h_neg)
        return [CurvePoint(z=list(row.z), c_hat=row.c_hat, j_hat=row.j_hat) for row in rows]

    return JSONResponse(content=jsonable_encoder(_guarded(run)))


@app.get("/simulate")
def simulate(
    example: int = Query(..., ge=1, le=4),
    n: int = Query(..., ge=2),
    seed: int = Query(0),
) -> StreamingResponse:
    d = _guarded(lambda: generate(SimSpec(example_id=example, n=n, seed=seed)))
    buffer = io.StringIO()
    write_csv(d, buffer, CsvSchema.simulated(d.p))
    return StreamingResponse(
        io.BytesIO(buffer.getvalue().encode("utf-8")),
        media_type="text/csv",
        headers={"Content-Disposition": f"attachment; filename=example{example}_n{n}_seed{seed}.csv"},
    )
