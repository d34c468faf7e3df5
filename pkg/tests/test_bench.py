import io
import math

import numpy as np
import pandas as pd
import pytest

import app.bench as bench
from app.bench import (
    BenchError,
    BenchPlan,
    Outcome,
    _Task,
    eise,
    emit_table,
    format_cell,
    run_plan,
    run_replication,
)
from app.cae import reduced_lambda_grid
from app.nrm import NrmError


def _tiny_plan(**overrides):
    values = dict(
        example_id=1,
        n_list=[40],
        replications=2,
        lambda_grid=[0.1, 1.0],
        h_grid=[0.5, 1.0, 2.0],
        methods=["cae", "nrm"],
        base_seed=3,
    )
    values.update(overrides)
    return BenchPlan(**values)


def test_eise_values():
    assert eise([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert eise([1.0, 1.0], [0.0, 0.0]) == 1.0
    assert eise([1.0, 3.0], [0.0, 0.0]) == 5.0


def test_eise_rejects_bad_input():
    with pytest.raises(ValueError):
        eise([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        eise([], [])


def test_format_cell():
    assert format_cell(0.048, 0.0398) == "0.048 (0.0398)"


def test_plan_validation():
    with pytest.raises(ValueError):
        BenchPlan(example_id=1, replications=0)
    with pytest.raises(ValueError):
        BenchPlan(example_id=1, n_list=[])
    with pytest.raises(ValueError):
        BenchPlan(example_id=1, lambda_grid=[0.0, 1.0])


def test_empty_method_list_gives_header_only_tables():
    plan = _tiny_plan(methods=[])
    result = run_plan(plan)
    text = emit_table(result, "markdown")
    assert "| method | n=40 |" in text
    assert "CAE" not in text and "NRM" not in text
    frame = pd.read_csv(io.StringIO(emit_table(result, "csv")))
    assert list(frame.columns) == ["method", "n", "metric", "mean", "sd"]
    assert frame.empty


def test_run_plan_is_deterministic_and_complete():
    plan = _tiny_plan()
    first, second = run_plan(plan), run_plan(plan)
    assert first.failures == 0
    for key, cell in first.cells.items():
        again = second.cells[key]
        assert cell.eise_c == again.eise_c
        assert cell.eise_j == again.eise_j
        assert len(cell.eise_c) == plan.replications
        assert all(v >= 0 for v in cell.eise_c + cell.eise_j)
    cae = first.cell("cae", 40)
    assert set(cae.lambdas) <= set(plan.lambda_grid)
    assert set(cae.bandwidths) <= set(plan.h_grid)
    assert first.cell("nrm", 40).lambdas == [None, None]


def test_selected_lambda_beats_every_grid_point():
    plan = _tiny_plan(methods=["cae"], replications=1)
    chosen = run_replication(_Task(plan=plan, method="cae", n=40, replication=0))
    assert not chosen.failed
    for lam in plan.lambda_grid:
        fixed = run_replication(_Task(plan=plan, method="cae", n=40, replication=0, tuned=(lam, chosen.h)))
        assert chosen.eise_c <= fixed.eise_c


def test_tuning_once_never_beats_per_replication_tuning():
    per_rep = run_plan(_tiny_plan(methods=["cae"], replications=3))
    once = run_plan(_tiny_plan(methods=["cae"], replications=3, oracle_per_replication=False))
    for a, b in zip(per_rep.cell("cae", 40).eise_c, once.cell("cae", 40).eise_c):
        assert a <= b + 1e-12


def test_tables_render_every_cell():
    result = run_plan(_tiny_plan(n_list=[30, 40]))
    text = emit_table(result, "markdown")
    assert "EISE of c(z)" in text and "EISE of J(z)" in text
    assert text.count("| CAE |") == 2 and text.count("| NRM |") == 2
    frame = pd.read_csv(io.StringIO(emit_table(result, "csv")))
    assert len(frame) == 2 * 2 * 2
    with pytest.raises(ValueError):
        emit_table(result, "latex")


def test_failed_replications_are_recorded(monkeypatch):
    def fake(task):
        if task.replication == 0:
            return Outcome(method=task.method, n=task.n, replication=0, error="boom")
        return Outcome(method=task.method, n=task.n, replication=task.replication, eise_c=0.5, eise_j=0.1)

    monkeypatch.setattr(bench, "run_replication", fake)
    result = run_plan(_tiny_plan(methods=["nrm"], replications=20))
    cell = result.cell("nrm", 40)
    assert cell.failures == 1
    assert len(cell.eise_c) == 19
    assert cell.mean("c") == 0.5 and cell.sd("c") == 0.0


def test_too_many_failures_abort(monkeypatch):
    def broken(d):
        raise NrmError("synthetic failure")

    monkeypatch.setattr(bench, "nrm_fit", broken)
    with pytest.raises(BenchError, match="replications failed"):
        run_plan(_tiny_plan(methods=["nrm"]))


def test_single_replication_sd_is_nan():
    result = run_plan(_tiny_plan(methods=["nrm"], replications=1))
    cell = result.cell("nrm", 40)
    assert math.isnan(cell.sd("c"))
    assert "nan" in emit_table(result, "markdown")


# ---------------------------------------------------------------------------
# Monte-Carlo reproductions (CAE_RUN_SLOW=1)
# ---------------------------------------------------------------------------


@pytest.mark.slow
def test_example_one_cut_point_errors():
    result = run_plan(BenchPlan(example_id=1, n_list=[100, 500], replications=50, methods=["cae", "nrm"], workers=4))
    cae = result.cell("cae", 500)
    assert abs(cae.mean("c") - 0.048) < 0.03
    assert abs(result.cell("cae", 100).mean("c") - 0.126) < 0.06
    assert abs(cae.mean("j") - 0.004) < 0.004
    assert abs(result.cell("nrm", 500).mean("c") - 0.073) < 0.02
    assert cae.mean("c") < result.cell("cae", 100).mean("c")


@pytest.mark.slow
def test_example_three_ordering():
    plan = BenchPlan(
        example_id=3, n_list=[500], replications=10, lambda_grid=reduced_lambda_grid(), methods=["cae", "nrm"], workers=4
    )
    result = run_plan(plan)
    assert 5 * result.cell("cae", 500).mean("c") < result.cell("nrm", 500).mean("c")


@pytest.mark.slow
def test_parallel_matches_sequential():
    plan = _tiny_plan(replications=4)
    serial = run_plan(plan)
    parallel = run_plan(plan.copy(update={"workers": 2}))
    for key, cell in serial.cells.items():
        np.testing.assert_array_equal(cell.eise_c, parallel.cells[key].eise_c)


def test_example_one_small_run_quality():
    plan = BenchPlan(
        example_id=1,
        n_list=[100],
        replications=3,
        lambda_grid=reduced_lambda_grid(),
        h_grid=[0.3, 1.0, 3.0],
        methods=["cae"],
    )
    result = run_plan(plan)
    assert result.failures == 0
    assert result.cell("cae", 100).mean("c") < 0.3


def test_example_three_cae_beats_nrm():
    plan = BenchPlan(
        example_id=3, n_list=[300], replications=1, lambda_grid=reduced_lambda_grid(), h_grid=[1.0, 3.0]
    )
    cae = run_replication(_Task(plan=plan, method="cae", n=300, replication=0))
    nrm = run_replication(_Task(plan=plan, method="nrm", n=300, replication=0))
    assert not cae.failed and not nrm.failed
    assert cae.eise_c < nrm.eise_c
