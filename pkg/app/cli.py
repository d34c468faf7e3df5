"""Command-line entry point: ``python -m app.cli <subcommand>``.

Exit codes: 0 on success, 2 for usage or input errors, 3 for computation errors.
"""
from __future__ import annotations

import logging
import sys
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .bench import BenchPlan, emit_table, run_plan
from .cae import load_model, reduced_lambda_grid
from .config import Settings, load_settings
from .dataset import CsvSchema, Dataset, DatasetError, load_csv
from .model import FitConfig, KernelSpec
from .service import PIMA_AGE_GRID, CutpointService
from .simulate import SimSpec, generate, write_simulated
from .youden import CurveRow

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_COMPUTE = 3


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _csv_list(cast: Callable) -> Callable[[str], List]:
    def parse(text: str) -> List:
        return [cast(item.strip()) for item in text.split(",") if item.strip()]

    return parse


def _add_common(parser: ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON file with settings overrides")
    parser.add_argument("--log-level", help="Logging level (default from CAE_LOG_LEVEL)")
    parser.add_argument("--seed", type=int, help="Random seed")


def _add_schema(parser: ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--input", type=Path, required=True, help="Headered CSV with marker, label and covariates")
    parser.add_argument("--marker", required=required, help="Marker column name")
    parser.add_argument("--label", required=required, help="Label column name")
    parser.add_argument("--covariates", type=_csv_list(str), default=[], help="Comma-separated covariate columns")
    parser.add_argument("--positive-label", default="1", help="Raw label value of diseased subjects")
    parser.add_argument("--negative-label", default="0", help="Raw label value of healthy subjects")


def _add_fit_options(parser: ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--lambda", dest="lambda_", type=float, help="Fixed regularization parameter")
    group.add_argument("--cv", type=int, help="Choose lambda by k-fold cross-validation")
    parser.add_argument("--delta", type=float, help="Width of the psi-delta ramp")
    parser.add_argument("--kernel", choices=["gaussian", "linear"])
    parser.add_argument("--sigma", type=float, help="Gaussian kernel width (default: median heuristic)")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="cae", description="Covariate-adjusted Youden cut-point estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="Fit c(z) and write a model file")
    _add_common(fit)
    _add_schema(fit)
    _add_fit_options(fit)
    fit.add_argument("--out", type=Path, required=True, help="Model JSON path")

    predict = sub.add_parser("predict", help="Evaluate a fitted c(z) at covariate rows")
    _add_common(predict)
    predict.add_argument("--model", type=Path, required=True)
    predict.add_argument("--input", type=Path, required=True, help="CSV with the model's covariate columns")
    predict.add_argument("--out", type=Path, required=True)

    youden = sub.add_parser("youden", help="Smoothed J(z) and c(z) over a query grid")
    _add_common(youden)
    _add_schema(youden)
    youden.add_argument("--model", type=Path, required=True)
    youden.add_argument("--grid", type=Path, help="CSV of query profiles (default: the training profiles)")
    youden.add_argument("--h1", type=float, help="Case bandwidth")
    youden.add_argument("--h-neg", type=float, help="Control bandwidth")
    youden.add_argument("--out", type=Path, required=True)

    pooled = sub.add_parser("pooled", help="Covariate-free cut-point and ROC points")
    _add_common(pooled)
    _add_schema(pooled)
    pooled.add_argument("--out", type=Path, required=True)
    pooled.add_argument("--roc-out", type=Path, help="Optional CSV of (threshold, fpr, tpr)")

    simulate = sub.add_parser("simulate", help="Generate a simulated dataset")
    _add_common(simulate)
    simulate.add_argument("--example", type=int, choices=[1, 2, 3, 4], required=True)
    simulate.add_argument("--n", type=int, required=True)
    simulate.add_argument("--out", type=Path, required=True)

    bench = sub.add_parser("bench", help="Monte-Carlo EISE tables")
    _add_common(bench)
    bench.add_argument("--example", type=int, choices=[1, 2, 3, 4], required=True)
    bench.add_argument("--n", dest="n_list", type=_csv_list(int), default=[100, 250, 500])
    bench.add_argument("--reps", type=int, default=50)
    bench.add_argument("--methods", type=_csv_list(str), default=["cae", "nrm"])
    bench.add_argument("--workers", type=int, help="Worker processes (default from CAE_BENCH_WORKERS)")
    bench.add_argument("--smoke", action="store_true", help="Use the reduced 11-point lambda grid")
    bench.add_argument("--tune-once", action="store_true", help="Tune lambda and h on replication 0 only")
    bench.add_argument("--format", choices=["csv", "markdown"], default="csv")
    bench.add_argument("--out", type=Path, help="Output path (default: standard output)")

    pima = sub.add_parser("pima", help="Age-adjusted cut-point and Youden curve for the Pima data")
    _add_common(pima)
    pima.add_argument("--input", type=Path, required=True)
    pima.add_argument("--marker", default="glucose")
    pima.add_argument("--label", default="outcome")
    pima.add_argument("--age-column", default="age")
    pima.add_argument("--ages", type=_csv_list(float), help="Comma-separated ages (default 22..59)")
    pima.add_argument("--cv", type=int, help="Cross-validation folds (default from CAE_CV_FOLDS)")
    pima.add_argument("--bandwidth", type=float, help="Smoother bandwidth for both classes")
    pima.add_argument("--out", type=Path, required=True)

    return parser


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _schema(args: Namespace) -> CsvSchema:
    return CsvSchema(
        marker=args.marker,
        label=args.label,
        covariates=tuple(args.covariates),
        encoding={args.positive_label: 1, args.negative_label: -1},
    )


def _read_profiles(path: Path, columns: Sequence[str]) -> np.ndarray:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DatasetError(f"Could not read covariate CSV {path}: {exc}") from exc
    missing = [col for col in columns if col not in frame.columns]
    if missing:
        raise DatasetError(f"Missing covariate column(s) {missing} in {path}.")
    values = frame[list(columns)].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values).all(axis=1))[0]) + 1
        raise DatasetError(f"Row {bad}: non-numeric covariate value in {path}.")
    return values.reshape(len(frame), len(columns))


def _write_curve(rows: Sequence[CurveRow], names: Sequence[str], path: Path) -> None:
    frame = pd.DataFrame([list(row.z) for row in rows], columns=list(names))
    frame["c_hat"] = [row.c_hat for row in rows]
    frame["j_hat"] = [row.j_hat for row in rows]
    frame.to_csv(path, index=False)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_fit(args: Namespace, settings: Settings) -> int:
    dataset = load_csv(args.input, _schema(args))
    service = CutpointService(settings)
    kernel = KernelSpec(kind=args.kernel or settings.kernel, sigma=args.sigma if args.sigma is not None else settings.sigma)
    model = service.fit(dataset, lambda_=args.lambda_, cv_folds=args.cv, delta=args.delta, kernel=kernel)
    model.save(args.out)
    print(f"objective={model.final_objective:.10g} iterations={model.iterations} lambda={model.lambda_:.6g}")
    return EXIT_OK


def cmd_predict(args: Namespace, settings: Settings) -> int:
    model = load_model(args.model)
    names = list(model.covariate_names)
    zs = _read_profiles(args.input, names) if names else np.zeros((len(pd.read_csv(args.input)), 0))
    frame = pd.DataFrame(zs, columns=names)
    frame["c_hat"] = model.predict(zs)
    frame.to_csv(args.out, index=False)
    return EXIT_OK


def cmd_youden(args: Namespace, settings: Settings) -> int:
    dataset = load_csv(args.input, _schema(args))
    model = load_model(args.model)
    queries = _read_profiles(args.grid, dataset.covariate_names) if args.grid else dataset.z
    rows = CutpointService(settings).curve(dataset, model, queries, h1=args.h1, h_neg=args.h_neg)
    _write_curve(rows, dataset.covariate_names, args.out)
    return EXIT_OK


def cmd_pooled(args: Namespace, settings: Settings) -> int:
    dataset = load_csv(args.input, _schema(args))
    service = CutpointService(settings)
    estimate = service.pooled(dataset)
    pd.DataFrame([{"cut": estimate.cut, "youden": estimate.youden, "objective": estimate.objective}]).to_csv(
        args.out, index=False
    )
    if args.roc_out:
        pd.DataFrame(service.roc(dataset), columns=["threshold", "fpr", "tpr"]).to_csv(args.roc_out, index=False)
    return EXIT_OK


def cmd_simulate(args: Namespace, settings: Settings) -> int:
    spec = SimSpec(example_id=args.example, n=args.n, seed=settings.seed)
    write_simulated(generate(spec), args.out)
    return EXIT_OK


def cmd_bench(args: Namespace, settings: Settings) -> int:
    fit = FitConfig.from_settings(settings)
    plan_values = dict(
        example_id=args.example,
        n_list=args.n_list,
        replications=args.reps,
        methods=args.methods,
        base_seed=settings.seed,
        oracle_per_replication=not args.tune_once,
        fit=fit.copy(update={"lambda_": None}),
        workers=args.workers or settings.bench_workers,
    )
    if args.smoke:
        plan_values["lambda_grid"] = reduced_lambda_grid()
    result = run_plan(BenchPlan(**plan_values))
    table = emit_table(result, args.format)
    if args.out:
        args.out.write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    return EXIT_OK


def cmd_pima(args: Namespace, settings: Settings) -> int:
    schema = CsvSchema(marker=args.marker, label=args.label, covariates=(args.age_column,))
    dataset = load_csv(args.input, schema)
    if args.age_column != "age":
        dataset = Dataset.from_arrays(dataset.x, dataset.y, dataset.z, covariate_names=("age",))
    ages = args.ages or PIMA_AGE_GRID
    rows = CutpointService(settings).pima(
        dataset, age_grid=ages, cv_folds=args.cv, seed=settings.seed, bandwidth=args.bandwidth
    )
    _write_curve(rows, ("age",), args.out)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[Namespace, Settings], int]] = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "youden": cmd_youden,
    "pooled": cmd_pooled,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
    "pima": cmd_pima,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        settings = load_settings(args.config, seed=args.seed, log_level=args.log_level)
        logging.basicConfig(
            level=settings.log_level.upper(),
            stream=sys.stderr,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return COMMANDS[args.command](args, settings)
    except (ValueError, OSError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        logger.error("%s failed: %s", args.command, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
