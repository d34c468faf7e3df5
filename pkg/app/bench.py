"""Monte-Carlo harness: replicate a simulation design and score estimators by EISE."""
from __future__ import annotations

import io
import logging
import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, validator

from .cae import default_lambda_grid, fit_path
from .model import FitConfig, SmootherConfig
from .nrm import nrm_cut, nrm_fit, nrm_youden
from .simulate import SimSpec, generate, oracle_for, true_cut_many, true_youden_many
from .youden import SupportError, default_bandwidth_grid, youden_many

logger = logging.getLogger(__name__)

MAX_FAILURE_SHARE = 0.10
METRICS = ("c", "j")
METRIC_TITLES = {"c": "EISE of c(z)", "j": "EISE of J(z)"}

Method = Literal["cae", "nrm"]


class BenchError(RuntimeError):
    """Raised when too many replications fail."""


class BenchPlan(BaseModel):
    example_id: Literal[1, 2, 3, 4]
    n_list: List[int] = Field(default_factory=lambda: [100, 250, 500])
    replications: int = 50
    lambda_grid: List[float] = Field(default_factory=default_lambda_grid)
    h_grid: List[float] = Field(default_factory=default_bandwidth_grid)
    methods: List[Method] = Field(default_factory=lambda: ["cae", "nrm"])
    base_seed: int = 0
    # when false, lambda and h are tuned on replication 0 and reused
    oracle_per_replication: bool = True
    fit: FitConfig = Field(default_factory=FitConfig)
    workers: int = 1

    class Config:
        frozen = True

    @validator("replications", "workers")
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @validator("n_list")
    def _sizes(cls, value: List[int]) -> List[int]:
        if not value or any(n < 2 for n in value):
            raise ValueError("n_list must be non-empty with every n >= 2")
        return value

    @validator("lambda_grid", "h_grid")
    def _grid(cls, value: List[float]) -> List[float]:
        if not value or any(not (math.isfinite(v) and v > 0) for v in value):
            raise ValueError("grids must be non-empty lists of positive values")
        return value


def eise(estimates: Sequence[float], truths: Sequence[float]) -> float:
    """(1/n) sum (estimate - truth)^2."""

    est = np.asarray(estimates, dtype=float).reshape(-1)
    tru = np.asarray(truths, dtype=float).reshape(-1)
    if est.shape != tru.shape:
        raise ValueError(f"Length mismatch: {est.shape[0]} estimates vs {tru.shape[0]} truths.")
    if est.size == 0:
        raise ValueError("EISE needs at least one value.")
    return float(np.mean((est - tru) ** 2))


# ---------------------------------------------------------------------------
# Replications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    method: str
    n: int
    replication: int
    eise_c: float = math.nan
    eise_j: float = math.nan
    lambda_: Optional[float] = None
    h: Optional[float] = None
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class _Task:
    plan: BenchPlan
    method: str
    n: int
    replication: int
    tuned: Optional[Tuple[float, float]] = None


def _tune_bandwidth(d, c_hat: np.ndarray, j_true: np.ndarray, h_grid: Sequence[float]) -> Tuple[float, float]:
    best: Optional[Tuple[float, float]] = None
    for h in h_grid:
        try:
            j_hat = youden_many(d, c_hat, d.z, SmootherConfig.tied(h))
        except SupportError:
            continue
        score = eise(j_hat, j_true)
        if best is None or score < best[0]:
            best = (score, float(h))
    if best is None:
        raise SupportError("every bandwidth left a covariate profile without kernel mass")
    return best


def _run_cae(task: _Task, d, c_true: np.ndarray, j_true: np.ndarray) -> Outcome:
    plan = task.plan
    grid = [task.tuned[0]] if task.tuned else plan.lambda_grid
    h_grid = [task.tuned[1]] if task.tuned else plan.h_grid

    models = fit_path(d, plan.fit, grid)
    scores = [eise(m.predict(d.z), c_true) for m in models]
    best = int(np.argmin(scores))
    c_hat = models[best].predict(d.z)

    eise_j, h = _tune_bandwidth(d, c_hat, j_true, h_grid)
    return Outcome(
        method="cae",
        n=task.n,
        replication=task.replication,
        eise_c=scores[best],
        eise_j=eise_j,
        lambda_=float(grid[best]),
        h=h,
    )


def _run_nrm(task: _Task, d, c_true: np.ndarray, j_true: np.ndarray) -> Outcome:
    m = nrm_fit(d)
    c_hat = [nrm_cut(m, z) for z in d.z]
    j_hat = [nrm_youden(m, z) for z in d.z]
    return Outcome(
        method="nrm",
        n=task.n,
        replication=task.replication,
        eise_c=eise(c_hat, c_true),
        eise_j=eise(j_hat, j_true),
    )


def run_replication(task: "_Task") -> Outcome:
    """One (method, n, replication) cell; failures are returned, not raised."""

    plan = task.plan
    try:
        d = generate(SimSpec(example_id=plan.example_id, n=task.n, seed=plan.base_seed + task.replication))
        oracle = oracle_for(plan.example_id)
        c_true = true_cut_many(oracle, d.z)
        j_true = true_youden_many(oracle, d.z)
        runner = _run_cae if task.method == "cae" else _run_nrm
        return runner(task, d, c_true, j_true)
    except (RuntimeError, ValueError) as exc:
        logger.warning(
            "Replication %d (%s, n=%d) failed: %s", task.replication, task.method, task.n, exc
        )
        return Outcome(method=task.method, n=task.n, replication=task.replication, error=str(exc))


def _execute(tasks: List[_Task], workers: int) -> List[Outcome]:
    if workers > 1 and len(tasks) > 1:
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            return list(pool.map(run_replication, tasks))
    return [run_replication(task) for task in tasks]


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def _sd(values: List[float]) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else math.nan


@dataclass(slots=True)
class CellSummary:
    method: str
    n: int
    eise_c: List[float] = field(default_factory=list)
    eise_j: List[float] = field(default_factory=list)
    lambdas: List[Optional[float]] = field(default_factory=list)
    bandwidths: List[Optional[float]] = field(default_factory=list)
    failures: int = 0

    def mean(self, metric: str) -> float:
        values = self.eise_c if metric == "c" else self.eise_j
        return float(np.mean(values)) if values else math.nan

    def sd(self, metric: str) -> float:
        return _sd(self.eise_c if metric == "c" else self.eise_j)


@dataclass(slots=True)
class BenchResult:
    plan: BenchPlan
    cells: Dict[Tuple[str, int], CellSummary] = field(default_factory=dict)
    outcomes: List[Outcome] = field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(cell.failures for cell in self.cells.values())

    def cell(self, method: str, n: int) -> CellSummary:
        return self.cells[(method, n)]


def _aggregate(plan: BenchPlan, outcomes: List[Outcome]) -> BenchResult:
    result = BenchResult(plan=plan, outcomes=outcomes)
    for method in plan.methods:
        for n in plan.n_list:
            result.cells[(method, n)] = CellSummary(method=method, n=n)
    for outcome in sorted(outcomes, key=lambda o: (o.method, o.n, o.replication)):
        cell = result.cells[(outcome.method, outcome.n)]
        if outcome.failed:
            cell.failures += 1
            continue
        cell.eise_c.append(outcome.eise_c)
        cell.eise_j.append(outcome.eise_j)
        cell.lambdas.append(outcome.lambda_)
        cell.bandwidths.append(outcome.h)
    return result


def run_plan(plan: BenchPlan) -> BenchResult:
    """Replicate every (method, n) cell of ``plan`` and aggregate EISE values."""

    logger.info(
        "Benchmark example %d: n=%s, %d replications, methods=%s, workers=%d",
        plan.example_id,
        plan.n_list,
        plan.replications,
        ",".join(plan.methods),
        plan.workers,
    )
    outcomes: List[Outcome] = []
    tuned: Dict[int, Tuple[float, float]] = {}
    start = 0
    if "cae" in plan.methods and not plan.oracle_per_replication:
        for n in plan.n_list:
            first = run_replication(_Task(plan=plan, method="cae", n=n, replication=0))
            if first.failed:
                raise BenchError(f"Tuning replication failed for n={n}: {first.error}")
            tuned[n] = (first.lambda_, first.h)
            outcomes.append(first)
        start = 1

    tasks = [
        _Task(plan=plan, method=method, n=n, replication=r, tuned=tuned.get(n) if method == "cae" else None)
        for method in plan.methods
        for n in plan.n_list
        for r in range(plan.replications)
        if not (method == "cae" and r < start)
    ]
    outcomes.extend(_execute(tasks, plan.workers))
    result = _aggregate(plan, outcomes)

    for cell in result.cells.values():
        if cell.failures > MAX_FAILURE_SHARE * plan.replications:
            raise BenchError(
                f"{cell.failures} of {plan.replications} replications failed for {cell.method} at n={cell.n}."
            )
        logger.info(
            "%s n=%d: EISE_c %.4g (%.4g), EISE_J %.4g (%.4g), %d failed",
            cell.method,
            cell.n,
            cell.mean("c"),
            cell.sd("c"),
            cell.mean("j"),
            cell.sd("j"),
            cell.failures,
        )
    return result


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def format_cell(mean: float, sd: float) -> str:
    return f"{mean:.3f} ({sd:.4f})"


def _markdown(result: BenchResult, metric: str) -> str:
    n_list = result.plan.n_list
    lines = [
        "| method | " + " | ".join(f"n={n}" for n in n_list) + " |",
        "| --- | " + " | ".join("---" for _ in n_list) + " |",
    ]
    for method in result.plan.methods:
        cells = [result.cell(method, n) for n in n_list]
        lines.append(
            f"| {method.upper()} | " + " | ".join(format_cell(c.mean(metric), c.sd(metric)) for c in cells) + " |"
        )
    return "\n".join(lines)


def emit_table(result: BenchResult, format: Literal["csv", "markdown"] = "markdown") -> str:
    """Render mean (sd) cells: markdown with one table per metric, csv in long form."""

    if format == "csv":
        rows = [
            {
                "method": cell.method,
                "n": cell.n,
                "metric": metric,
                "mean": cell.mean(metric),
                "sd": cell.sd(metric),
            }
            for cell in result.cells.values()
            for metric in METRICS
        ]
        frame = pd.DataFrame(rows, columns=["method", "n", "metric", "mean", "sd"])
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False)
        return buffer.getvalue()
    if format != "markdown":
        raise ValueError(f"Unknown table format '{format}'; expected csv or markdown.")
    return "\n\n".join(f"{METRIC_TITLES[m]}\n\n{_markdown(result, m)}" for m in METRICS) + "\n"
