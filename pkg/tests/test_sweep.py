from __future__ import annotations

import csv

import pytest

from escooter_balance.data_loader import ScenarioDocument
from escooter_balance.entities import DomainError
from escooter_balance.sim.engine import run
from escooter_balance.sim.monitor import summarize
from escooter_balance.sim.sweep import expand_grid, run_sweep, write_sweep_csv


def short_document(name: str = "paper_scenario_pd", horizon: float = 2.0) -> ScenarioDocument:
    return ScenarioDocument.load(name).with_overrides([("horizon", horizon)])


def test_grid_expands_in_key_order():
    cells = expand_grid({"gains.kd": [40, 80], "uncertainty.v_scale": [1.0, 0.8]})
    assert cells == [
        (("gains.kd", 40), ("uncertainty.v_scale", 1.0)),
        (("gains.kd", 40), ("uncertainty.v_scale", 0.8)),
        (("gains.kd", 80), ("uncertainty.v_scale", 1.0)),
        (("gains.kd", 80), ("uncertainty.v_scale", 0.8)),
    ]
    with pytest.raises(DomainError):
        expand_grid({})
    with pytest.raises(DomainError):
        expand_grid({"gains.kd": []})


def test_single_cell_matches_direct_simulation():
    document = short_document()
    (row,) = run_sweep(document, {"gains.kd": [80.0]})
    summary = summarize(run(document.build()))
    assert row.status == "ok"
    assert row.u_max == summary.u_max
    assert row.theta_bound == summary.theta_band
    assert row.sup_theta == summary.sup_theta
    assert row.theta_contained == summary.theta.contained


def test_rate_band_halves_as_damping_doubles():
    rows = run_sweep(short_document(), {"gains.kd": [40.0, 80.0, 160.0]})
    bands = [row.theta_dot_bound for row in rows]
    assert bands[0] / bands[1] == pytest.approx(2.0, rel=0.05)
    assert bands[1] / bands[2] == pytest.approx(2.0, rel=0.05)


def test_exact_estimates_shrink_the_residual_band():
    rows = run_sweep(short_document("paper_scenario_pdfl"), {"uncertainty.v_scale": [1.0, 0.8]})
    exact, scaled = rows
    assert exact.theta_bound < scaled.theta_bound
    assert exact.u_max == pytest.approx(0.0, abs=1e-9)


def test_failed_cells_are_recorded_and_the_sweep_continues(tmp_path):
    rows = run_sweep(short_document(horizon=0.2), {"gains.kd": [0.0, 80.0]})
    assert rows[0].status == "error"
    assert "gains must be positive" in rows[0].error
    assert rows[0].u_max is None
    assert rows[1].status == "ok"
    assert rows[1].error is None

    path = write_sweep_csv(rows, ["gains.kd"], tmp_path / "sweep.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("cell,gains.kd,status,u_max")
    assert lines[0].endswith(",error")
    assert lines[1].startswith("0,0,error,")
    with path.open(encoding="utf-8", newline="") as handle:
        table = list(csv.DictReader(handle))
    assert table[0]["error"] == rows[0].error
    assert table[1]["status"] == "ok" and table[1]["error"] == ""


def test_capsized_cells_are_flagged():
    rows = run_sweep(short_document(), {"controller": ["none", "pd"]})
    assert [row.status for row in rows] == ["capsized", "ok"]


def test_parallel_sweep_keeps_cell_order():
    grid = {"gains.kd": [40.0, 80.0, 160.0]}
    document = short_document(horizon=0.3)
    assert run_sweep(document, grid, workers=2) == run_sweep(document, grid)
