import json
import math
import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from app.cli import EXIT_COMPUTE, EXIT_OK, EXIT_USAGE, main

SIM_LABELS = ["--marker", "x", "--label", "y", "--covariates", "z1", "--positive-label", "1", "--negative-label=-1"]


def _simulated(tmp_path: Path, n: int = 60) -> Path:
    path = tmp_path / "sim.csv"
    assert main(["simulate", "--example", "1", "--n", str(n), "--seed", "3", "--out", str(path)]) == EXIT_OK
    return path


def test_simulate_writes_rows(tmp_path):
    path = tmp_path / "sim.csv"
    assert main(["simulate", "--example", "1", "--n", "100", "--out", str(path)]) == EXIT_OK
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["x", "y", "z1"]
    assert len(frame) == 100
    assert set(frame["y"]) <= {-1, 1}


def test_simulate_rejects_tiny_n(tmp_path, capsys):
    assert main(["simulate", "--example", "2", "--n", "1", "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_missing_required_flag_is_usage_error(tmp_path):
    path = _simulated(tmp_path)
    assert main(["fit", "--input", str(path), "--label", "y", "--out", str(tmp_path / "m.json")]) == EXIT_USAGE


def test_lambda_and_cv_are_exclusive(tmp_path):
    path = _simulated(tmp_path)
    argv = ["fit", "--input", str(path), *SIM_LABELS, "--lambda", "0.1", "--cv", "5", "--out", str(tmp_path / "m.json")]
    assert main(argv) == EXIT_USAGE


def test_missing_input_file(tmp_path):
    argv = ["pooled", "--input", str(tmp_path / "absent.csv"), "--marker", "x", "--label", "y", "--out", str(tmp_path / "p.csv")]
    assert main(argv) == EXIT_USAGE


def test_pooled_on_separated_data(tmp_path):
    data = tmp_path / "sep.csv"
    pd.DataFrame({"marker": [1.0, 2.0, 3.0, 7.0, 8.0, 9.0], "status": [0, 0, 0, 1, 1, 1]}).to_csv(data, index=False)
    out, roc = tmp_path / "pooled.csv", tmp_path / "roc.csv"
    argv = ["pooled", "--input", str(data), "--marker", "marker", "--label", "status", "--out", str(out), "--roc-out", str(roc)]
    assert main(argv) == EXIT_OK
    row = pd.read_csv(out).iloc[0]
    assert row["youden"] == 1.0
    assert 3.0 < row["cut"] <= 7.0
    curve = pd.read_csv(roc)
    assert list(curve.columns) == ["threshold", "fpr", "tpr"]
    assert ((curve["fpr"] == 0.0) & (curve["tpr"] == 1.0)).any()


def test_fit_predict_and_youden(tmp_path, capsys):
    data = _simulated(tmp_path)
    model = tmp_path / "model.json"
    assert main(["fit", "--input", str(data), *SIM_LABELS, "--lambda", "0.1", "--out", str(model)]) == EXIT_OK
    summary = capsys.readouterr().out
    assert summary.startswith("objective=")
    stored = json.loads(model.read_text(encoding="utf-8"))
    assert stored["lambda"] == 0.1
    assert all(math.isfinite(v) for v in stored["objective_trace"])
    assert stored["covariate_names"] == ["z1"]

    grid = tmp_path / "grid.csv"
    pd.DataFrame({"z1": [1.5, 3.0, 4.5]}).to_csv(grid, index=False)
    preds = tmp_path / "pred.csv"
    assert main(["predict", "--model", str(model), "--input", str(grid), "--out", str(preds)]) == EXIT_OK
    predicted = pd.read_csv(preds)
    assert list(predicted.columns) == ["z1", "c_hat"]
    assert np.all(np.isfinite(predicted["c_hat"]))

    curve = tmp_path / "curve.csv"
    argv = ["youden", "--input", str(data), *SIM_LABELS, "--model", str(model), "--grid", str(grid), "--h1", "1.0", "--h-neg", "1.0", "--out", str(curve)]
    assert main(argv) == EXIT_OK
    rows = pd.read_csv(curve)
    assert list(rows.columns) == ["z1", "c_hat", "j_hat"]
    np.testing.assert_allclose(rows["c_hat"], predicted["c_hat"])
    assert rows["j_hat"].between(-1.0, 1.0).all()


def test_youden_outside_support_is_compute_error(tmp_path, capsys):
    data = _simulated(tmp_path)
    model = tmp_path / "model.json"
    assert main(["fit", "--input", str(data), *SIM_LABELS, "--lambda", "1.0", "--out", str(model)]) == EXIT_OK
    grid = tmp_path / "far.csv"
    pd.DataFrame({"z1": [500.0]}).to_csv(grid, index=False)
    argv = ["youden", "--input", str(data), *SIM_LABELS, "--model", str(model), "--grid", str(grid), "--h1", "0.001", "--h-neg", "0.001", "--out", str(tmp_path / "c.csv")]
    assert main(argv) == EXIT_COMPUTE
    assert "outside covariate support" in capsys.readouterr().err


def test_config_file_and_unknown_keys(tmp_path):
    data = _simulated(tmp_path)
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"lambda_": 0.5, "delta": 0.2}), encoding="utf-8")
    model = tmp_path / "model.json"
    assert main(["fit", "--config", str(config), "--input", str(data), *SIM_LABELS, "--out", str(model)]) == EXIT_OK
    stored = json.loads(model.read_text(encoding="utf-8"))
    assert stored["lambda"] == 0.5 and stored["delta"] == 0.2

    config.write_text(json.dumps({"lamda": 0.5}), encoding="utf-8")
    assert main(["fit", "--config", str(config), "--input", str(data), *SIM_LABELS, "--out", str(model)]) == EXIT_USAGE


def test_bench_smoke_table(tmp_path):
    out = tmp_path / "table.md"
    argv = ["bench", "--example", "1", "--n", "30", "--reps", "2", "--smoke", "--format", "markdown", "--out", str(out)]
    assert main(argv) == EXIT_OK
    text = out.read_text(encoding="utf-8")
    assert "| method | n=30 |" in text
    assert "| CAE |" in text and "| NRM |" in text


def test_bench_csv_to_stdout(capsys):
    assert main(["bench", "--example", "2", "--n", "30", "--reps", "2", "--methods", "nrm"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "method,n,metric,mean,sd"
    assert len(lines) == 3


@pytest.mark.skipif(not os.environ.get("PIMA_CSV"), reason="set PIMA_CSV to the Pima diabetes CSV")
def test_pima_curve(tmp_path):
    out = tmp_path / "pima.csv"
    assert main(["pima", "--input", os.environ["PIMA_CSV"], "--out", str(out)]) == EXIT_OK
    rows = pd.read_csv(out)
    assert list(rows["age"]) == [float(a) for a in range(22, 60)]
    assert rows["j_hat"].between(-1.0, 1.0).all()
    # cut-points stay in the observed glucose range
    assert rows["c_hat"].between(40.0, 200.0).all()
    # older patients get a higher glucose cut-point and a weaker marker
    assert np.polyfit(rows["age"], rows["c_hat"], 1)[0] > 0
    assert np.polyfit(rows["age"], rows["j_hat"], 1)[0] < 0


@pytest.mark.skipif(not os.environ.get("PIMA_CSV"), reason="set PIMA_CSV to the Pima diabetes CSV")
def test_pima_is_deterministic_for_a_seed(tmp_path):
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    for out in (first, second):
        assert main(["pima", "--input", os.environ["PIMA_CSV"], "--seed", "5", "--cv", "3", "--out", str(out)]) == EXIT_OK
    assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")


def test_cross_validated_fit_is_deterministic(tmp_path):
    data = _simulated(tmp_path, n=40)
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    for out in (first, second):
        argv = ["fit", "--input", str(data), *SIM_LABELS, "--cv", "3", "--seed", "2", "--out", str(out)]
        assert main(argv) == EXIT_OK
    assert json.loads(first.read_text(encoding="utf-8")) == json.loads(second.read_text(encoding="utf-8"))


def test_zero_lambda_is_usage_error(tmp_path):
    data = _simulated(tmp_path)
    argv = ["fit", "--input", str(data), *SIM_LABELS, "--lambda", "0", "--out", str(tmp_path / "m.json")]
    assert main(argv) == EXIT_USAGE
