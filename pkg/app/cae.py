"""Covariate-adjusted cut-point estimation with the psi-delta loss.

The cut-point function c(z) = b + sum_i a_i K(z_i, z) minimizes

    (1/n) sum_i w(y_i) L_delta(y_i (x_i - c(z_i))) + (lambda/2) a^T K a

which is non-convex; it is solved by a difference-of-convex algorithm whose
convex subproblems are quadratic programs solved with cvxpy.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import cvxpy as cp
import numpy as np
from sklearn.model_selection import KFold

from .dataset import Dataset, DatasetError, class_weights
from .kernels import (
    RkhsFunction,
    Standardizer,
    evaluate_many,
    gram,
    resolve_kernel,
    rkhs_norm_sq,
)
from .losses import PsiDelta, loss_psi, subgrad_g2
from .model import FitConfig, KernelSpec, ModelFile
from .pooled import pooled_fit

logger = logging.getLogger(__name__)

EIGEN_RTOL = 1e-10
ACCEPT_RTOL = 1e-12


class SolverError(RuntimeError):
    """Raised when the optimizer fails; carries the objective trace so far."""

    def __init__(self, message: str, trace: Optional[Sequence[float]] = None) -> None:
        super().__init__(message)
        self.trace = list(trace or [])


def default_lambda_grid() -> List[float]:
    """{10^((s - 31)/10) : s = 1..61}."""

    return [10.0 ** ((s - 31) / 10.0) for s in range(1, 62)]


def reduced_lambda_grid(points: int = 11) -> List[float]:
    """Evenly thinned copy of the default grid for smoke runs."""

    full = default_lambda_grid()
    idx = np.unique(np.round(np.linspace(0, len(full) - 1, points)).astype(int))
    return [full[i] for i in idx]


# ---------------------------------------------------------------------------
# Fitted model
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class CaeModel:
    c_fn: RkhsFunction
    config: FitConfig
    standardizer: Standardizer
    train_objective_trace: List[float] = field(default_factory=list)
    covariate_names: Tuple[str, ...] = ()
    converged: bool = True

    @property
    def lambda_(self) -> Optional[float]:
        return self.config.lambda_

    @property
    def iterations(self) -> int:
        return max(len(self.train_objective_trace) - 1, 0)

    @property
    def final_objective(self) -> float:
        return self.train_objective_trace[-1] if self.train_objective_trace else math.nan

    def predict(self, zs) -> np.ndarray:
        """Evaluate c(z) at raw (unstandardized) covariate rows."""

        arr = np.asarray(zs, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, self.standardizer.p)
        return evaluate_many(self.c_fn, self.standardizer.transform(arr))

    def to_file(self) -> ModelFile:
        return ModelFile(
            kernel=self.c_fn.kernel.kind,
            sigma=self.c_fn.kernel.sigma,
            means=self.standardizer.means.tolist(),
            scales=self.standardizer.scales.tolist(),
            b=self.c_fn.b,
            a=self.c_fn.a.tolist(),
            profiles=self.c_fn.profiles.tolist(),
            delta=self.config.delta,
            lambda_=self.config.lambda_,
            objective_trace=list(self.train_objective_trace),
            covariate_names=list(self.covariate_names),
        )

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_file().json(by_alias=True), encoding="utf-8")


def model_from_file(payload: ModelFile) -> CaeModel:
    kernel = KernelSpec(kind=payload.kernel, sigma=payload.sigma)
    p = len(payload.means)
    profiles = np.asarray(payload.profiles, dtype=float).reshape(len(payload.a), p)
    c_fn = RkhsFunction(a=np.asarray(payload.a, dtype=float), b=payload.b, profiles=profiles, kernel=kernel)
    config = FitConfig(delta=payload.delta, lambda_=payload.lambda_, kernel=kernel)
    return CaeModel(
        c_fn=c_fn,
        config=config,
        standardizer=Standardizer(means=np.asarray(payload.means), scales=np.asarray(payload.scales)),
        train_objective_trace=list(payload.objective_trace),
        covariate_names=tuple(payload.covariate_names),
    )


def load_model(path: Union[str, Path]) -> CaeModel:
    try:
        payload = ModelFile.parse_file(path)
    except (OSError, ValueError) as exc:
        raise SolverError(f"Could not read model file {path}: {exc}") from exc
    return model_from_file(payload)


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------


def objective(d: Dataset, f: RkhsFunction, delta: float, lambda_: float, gram_matrix: np.ndarray) -> float:
    """Weighted psi-delta empirical risk plus (lambda/2) ||c||^2 at training profiles."""

    weights = class_weights(d)
    mat = np.asarray(gram_matrix, dtype=float)
    if mat.shape != (d.n, d.n) or f.a.shape[0] != d.n:
        raise SolverError(f"Gram shape {mat.shape} / {f.a.shape[0]} coefficients do not match n={d.n}.")
    c = mat @ f.a + f.b
    u = d.y * (d.x - c)
    risk = float(np.mean(weights.of(d.y) * loss_psi(PsiDelta(delta), u)))
    return risk + 0.5 * lambda_ * rkhs_norm_sq(f, mat)


@dataclass(slots=True)
class _Subproblem:
    """Convex DCA subproblem compiled once per training set.

    With K ~ U diag(s) U^T over the eigenvalues above EIGEN_RTOL * max(s),
    the fitted values are c = U sqrt(s) beta + b and a^T K a = |beta|^2, so

        sum_i (w_i/n) (delta - u_i)_+ / delta + (lambda/2) |beta|^2 - q^T c

    is a quadratic program in (beta, b). q and lambda are parameters, so one
    compiled problem serves every DCA step and every lambda of a path.
    """

    basis: np.ndarray
    root: np.ndarray
    problem: Optional[cp.Problem] = None
    beta: Optional[cp.Variable] = None
    offset: Optional[cp.Variable] = None
    linear: Optional[cp.Parameter] = None
    lam: Optional[cp.Parameter] = None

    @classmethod
    def build(cls, x: np.ndarray, y: np.ndarray, omega: np.ndarray, K: np.ndarray, delta: float) -> "_Subproblem":
        s, U = np.linalg.eigh(K)
        top = float(s.max()) if s.size else 0.0
        keep = s > EIGEN_RTOL * top if top > 0 else np.zeros(s.shape, dtype=bool)
        basis, root = U[:, keep], np.sqrt(s[keep])
        if root.size == 0:
            # constant cut-points only; the offset is solved exactly
            return cls(basis=basis, root=root)

        beta = cp.Variable(root.size)
        offset = cp.Variable()
        linear = cp.Parameter(x.shape[0])
        lam = cp.Parameter(nonneg=True)
        fitted = (basis * root) @ beta + offset
        hinge = (omega / delta) @ cp.pos(delta - cp.multiply(y, x - fitted))
        objective = hinge + 0.5 * lam * cp.sum_squares(beta) - linear @ fitted
        logger.debug("Compiled subproblem with %d of %d kernel directions", root.size, s.size)
        return cls(
            basis=basis,
            root=root,
            problem=cp.Problem(cp.Minimize(objective)),
            beta=beta,
            offset=offset,
            linear=linear,
            lam=lam,
        )

    def solve(self, q: np.ndarray, lam: float, max_iter: int, rel_tol: float) -> Optional[Tuple[np.ndarray, float, int, bool]]:
        """(a, b, iterations, inaccurate), or None when K has no usable direction."""

        if self.problem is None:
            return None
        self.linear.value = q
        self.lam.value = lam
        try:
            self.problem.solve(solver=cp.CLARABEL, max_iter=max_iter, tol_gap_rel=rel_tol, tol_gap_abs=rel_tol)
        except cp.error.SolverError as exc:
            raise SolverError(f"Convex subproblem failed at lambda={lam:.4g}: {exc}") from exc
        status = self.problem.status
        if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or self.beta.value is None:
            raise SolverError(f"Convex subproblem ended with status '{status}' at lambda={lam:.4g}.")
        a = self.basis @ (np.asarray(self.beta.value, dtype=float) / self.root)
        iterations = int(self.problem.solver_stats.num_iters or 0)
        return a, float(self.offset.value), iterations, status == cp.OPTIMAL_INACCURATE


@dataclass(slots=True)
class _Problem:
    """Training data in solver coordinates, shared across lambda values."""

    x: np.ndarray
    y: np.ndarray
    omega: np.ndarray
    K: np.ndarray
    profiles: np.ndarray
    standardizer: Standardizer
    kernel: KernelSpec
    delta: float
    subproblem: _Subproblem

    @classmethod
    def build(cls, d: Dataset, cfg: FitConfig) -> "_Problem":
        d.require_both_classes()
        if d.n < 2:
            raise DatasetError("At least two samples are required.")
        standardizer = Standardizer.fit(d.z)
        profiles = standardizer.transform(d.z)
        kernel = resolve_kernel(cfg.kernel, profiles)
        weights = class_weights(d)
        y = d.y.astype(float)
        omega = weights.of(d.y) / d.n
        K = gram(profiles, kernel)
        return cls(
            x=d.x,
            y=y,
            omega=omega,
            K=K,
            profiles=profiles,
            standardizer=standardizer,
            kernel=kernel,
            delta=cfg.delta,
            subproblem=_Subproblem.build(d.x, y, omega, K, cfg.delta),
        )

    def margins(self, Ka: np.ndarray, b: float) -> np.ndarray:
        return self.y * (self.x - Ka - b)

    def risk(self, Ka: np.ndarray, b: float) -> float:
        return float(self.omega @ loss_psi(PsiDelta(self.delta), self.margins(Ka, b)))

    def dca_objective(self, a: np.ndarray, Ka: np.ndarray, b: float, lam: float) -> float:
        return self.risk(Ka, b) + 0.5 * lam * max(float(a @ Ka), 0.0)

    def linearization(self, Ka: np.ndarray, b: float) -> np.ndarray:
        """Subgradient of s2 with respect to the fitted values c_i."""

        u = self.margins(Ka, b)
        return self.omega * subgrad_g2(PsiDelta(self.delta), u) * (-self.y)


# ---------------------------------------------------------------------------
# Inner convex solver
# ---------------------------------------------------------------------------


class InnerSolution(NamedTuple):
    a: np.ndarray
    b: float
    objective: float
    iterations: int
    capped: bool


def _subproblem_value(
    omega: np.ndarray,
    y: np.ndarray,
    x: np.ndarray,
    delta: float,
    lam: float,
    q: np.ndarray,
    a: np.ndarray,
    Ka: np.ndarray,
    b: float,
) -> float:
    c = Ka + b
    u = y * (x - c)
    hinge = float(omega @ np.maximum(delta - u, 0.0)) / delta
    return hinge + 0.5 * lam * max(float(a @ Ka), 0.0) - float(q @ c)


def _best_offset(omega, y, x, delta, q_sum, Ka) -> Tuple[float, float]:
    """Exact minimizer over b of the hinge part minus q_sum * b for fixed Ka.

    The function is convex piecewise linear in b with kinks where some margin
    equals delta, so a minimizer lies on one of those breakpoints.
    """

    residual = x - Ka
    breaks = residual - y * delta
    u = y[:, None] * (residual[:, None] - breaks[None, :])
    values = (omega @ np.maximum(delta - u, 0.0)) / delta - q_sum * breaks
    best = int(np.argmin(values))
    return float(breaks[best]), float(values[best])


def inner_solve(
    d: Dataset,
    gram_matrix: np.ndarray,
    delta: float,
    lambda_: float,
    linear_term: np.ndarray,
    warm_start: Tuple[np.ndarray, float],
    max_iter: int = 200,
    rel_tol: float = 1e-7,
) -> InnerSolution:
    """Minimize the convex DCA subproblem

    F(a, b) = sum_i (w_i/n) (delta - u_i)_+ / delta + (lambda/2) a^T K a - q^T (K a + b)

    as a quadratic program. The offset of the solution is re-solved exactly
    over the hinge breakpoints, and ``warm_start`` is kept unless a candidate
    improves on it.
    """

    weights = class_weights(d)
    omega = weights.of(d.y) / d.n
    y = d.y.astype(float)
    K = np.asarray(gram_matrix, dtype=float)
    if K.shape != (d.n, d.n):
        raise SolverError(f"Gram shape {K.shape} does not match n={d.n}.")
    subproblem = _Subproblem.build(d.x, y, omega, K, delta)
    return _inner_solve(
        subproblem, omega, y, d.x, K, delta, lambda_, np.asarray(linear_term, dtype=float), warm_start, max_iter, rel_tol
    )


def _inner_solve(subproblem, omega, y, x, K, delta, lam, q, warm_start, max_iter, rel_tol) -> InnerSolution:
    a0 = np.asarray(warm_start[0], dtype=float).copy()
    b0 = float(warm_start[1])
    if a0.shape != (K.shape[0],) or q.shape != (K.shape[0],):
        raise SolverError(f"Warm start / linear term do not match n={K.shape[0]}.")

    def value(a: np.ndarray, b: float) -> float:
        return _subproblem_value(omega, y, x, delta, lam, q, a, K @ a, b)

    best_a, best_b = a0, b0
    best_val = value(a0, b0)
    candidates: List[Tuple[np.ndarray, Optional[float]]] = [(a0, None)]
    iterations, capped = 0, False
    solved = subproblem.solve(q, lam, max_iter, rel_tol)
    if solved is not None:
        a_new, b_new, iterations, capped = solved
        candidates = [(a_new, b_new), (a_new, None), (a0, None)]
        if capped:
            logger.warning("Convex subproblem solved inaccurately after %d iterations (lambda=%.4g)", iterations, lam)

    q_sum = float(q.sum())
    for a, b in candidates:
        if b is None:
            b, _ = _best_offset(omega, y, x, delta, q_sum, K @ a)
        candidate = value(a, b)
        if candidate < best_val - ACCEPT_RTOL * max(1.0, abs(best_val)):
            best_val, best_a, best_b = candidate, a, b

    logger.debug("Inner solve finished after %d iterations at %.10g", iterations, best_val)
    return InnerSolution(a=best_a, b=best_b, objective=best_val, iterations=iterations, capped=capped)


# ---------------------------------------------------------------------------
# DCA outer loop
# ---------------------------------------------------------------------------


def _run_dca(problem: _Problem, lam: float, cfg: FitConfig, b_init: float) -> Tuple[np.ndarray, float, List[float], bool]:
    n = problem.x.shape[0]
    a = np.zeros(n)
    b = float(b_init)
    Ka = np.zeros(n)
    current = problem.dca_objective(a, Ka, b, lam)
    trace = [current]
    converged = False

    for k in range(1, cfg.dca_max_iter + 1):
        q = problem.linearization(Ka, b)
        solution = _inner_solve(
            problem.subproblem,
            problem.omega,
            problem.y,
            problem.x,
            problem.K,
            problem.delta,
            lam,
            q,
            (a, b),
            cfg.inner_max_iter,
            cfg.inner_rel_tol,
        )
        new_a, new_b = solution.a, solution.b
        new_Ka = problem.K @ new_a
        updated = problem.dca_objective(new_a, new_Ka, new_b, lam)
        slack = 2.0 * cfg.inner_rel_tol * max(1.0, abs(current))
        if updated > current + slack:
            trace.append(updated)
            raise SolverError(
                f"DCA objective increased from {current:.10g} to {updated:.10g} at iteration {k}.", trace
            )
        trace.append(updated)
        a, b, Ka = new_a, new_b, new_Ka
        change = abs(current - updated)
        current = updated
        logger.debug("DCA iteration %d: objective %.10g (change %.3g)", k, updated, change)
        if change <= cfg.dca_rel_tol * max(abs(trace[-2]), 1e-12):
            converged = True
            break

    if not converged:
        logger.warning("DCA stopped at the iteration cap (%d) with objective %.10g", cfg.dca_max_iter, current)
    return a, b, trace, converged


def _build_model(problem: _Problem, d: Dataset, cfg: FitConfig, lam: float, result) -> CaeModel:
    a, b, trace, converged = result
    c_fn = RkhsFunction(a=a, b=b, profiles=problem.profiles, kernel=problem.kernel)
    config = cfg.copy(update={"lambda_": lam, "kernel": problem.kernel})
    return CaeModel(
        c_fn=c_fn,
        config=config,
        standardizer=problem.standardizer,
        train_objective_trace=trace,
        covariate_names=d.covariate_names,
        converged=converged,
    )


def dca_fit(d: Dataset, cfg: FitConfig) -> CaeModel:
    """Fit c(z) by DCA from a = 0, b = pooled cut-point.

    When ``cfg.lambda_`` is unset, lambda is chosen by ``cfg.cv_folds``-fold
    cross-validation over ``cfg.lambda_grid`` (default grid if unset).
    """

    lam = cfg.lambda_
    if lam is None:
        if cfg.cv_folds is None:
            raise ValueError("Either lambda or cv_folds must be configured.")
        grid = cfg.lambda_grid or default_lambda_grid()
        lam = cv_select_lambda(d, cfg, grid, cfg.cv_folds)

    problem = _Problem.build(d, cfg)
    b_init = pooled_fit(d).cut
    model = _build_model(problem, d, cfg, lam, _run_dca(problem, lam, cfg, b_init))
    logger.info(
        "DCA fit (n=%d, p=%d, lambda=%.4g, delta=%g) finished after %d iterations with objective %.6g",
        d.n,
        d.p,
        lam,
        cfg.delta,
        model.iterations,
        model.final_objective,
    )
    return model


def fit_path(d: Dataset, cfg: FitConfig, grid: Sequence[float]) -> List[CaeModel]:
    """Fit one model per lambda in ``grid`` sharing standardization and Gram matrix."""

    problem = _Problem.build(d, cfg)
    b_init = pooled_fit(d).cut
    models = []
    for lam in grid:
        models.append(_build_model(problem, d, cfg, float(lam), _run_dca(problem, float(lam), cfg, b_init)))
    return models


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


def held_out_youden_objective(d: Dataset, c_hat: np.ndarray) -> float:
    """(1/n_v) sum w_v(y_i) (1 + y_i sign(x_i - c_i)) with sign(0) = +1."""

    weights = class_weights(d)
    sign = np.where(d.x - np.asarray(c_hat, dtype=float) >= 0, 1.0, -1.0)
    return float(np.mean(weights.of(d.y) * (1.0 + d.y * sign)))


@dataclass(slots=True)
class CvReport:
    grid: List[float]
    mean_scores: List[float]
    folds_used: int
    selected: float


def cross_validate(d: Dataset, cfg: FitConfig, grid: Sequence[float], folds: int) -> CvReport:
    if folds < 2:
        raise ValueError("Cross-validation needs at least two folds.")
    if not grid:
        raise ValueError("Lambda grid must be non-empty.")
    ordered = sorted(float(v) for v in grid)
    splitter = KFold(n_splits=folds, shuffle=True, random_state=cfg.seed)

    totals = np.zeros(len(ordered))
    used = 0
    for fold, (train_idx, valid_idx) in enumerate(splitter.split(d.x)):
        train, valid = d.subset(train_idx), d.subset(valid_idx)
        if min(train.n_pos, train.n_neg, valid.n_pos, valid.n_neg) < 1:
            logger.warning("Skipping CV fold %d: a class is missing from the split", fold)
            continue
        try:
            models = fit_path(train, cfg, ordered)
        except SolverError as exc:
            logger.warning("Skipping CV fold %d: %s", fold, exc)
            continue
        totals += [held_out_youden_objective(valid, m.predict(valid.z)) for m in models]
        used += 1

    if used == 0:
        raise SolverError("Every cross-validation fold was skipped.")
    means = totals / used
    selected = ordered[int(np.argmax(means))]
    logger.info("Cross-validation over %d lambdas and %d folds selected lambda=%.4g", len(ordered), used, selected)
    return CvReport(grid=ordered, mean_scores=means.tolist(), folds_used=used, selected=selected)


def cv_select_lambda(d: Dataset, cfg: FitConfig, grid: Sequence[float], folds: int) -> float:
    """Lambda maximizing the mean held-out Youden objective; ties go to the smaller lambda."""

    return cross_validate(d, cfg, grid, folds).selected
