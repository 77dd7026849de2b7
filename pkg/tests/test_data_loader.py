from __future__ import annotations

import json
import math

import pytest

from escooter_balance.data_loader import (
    ConfigError,
    ScenarioDocument,
    apply_overrides,
    bundled_scenarios,
    load_scenario,
    parse_angle,
    parse_override,
    read_csv_table,
)
from escooter_balance.dynamics import CouplingSign
from escooter_balance.entities import DomainError
from escooter_balance.sim.engine import ControllerKind


def test_bundled_scenarios_cover_four_variants():
    assert bundled_scenarios() == [
        "paper_scenario_pd",
        "paper_scenario_pdfl",
        "paper_scenario_pdflu",
        "paper_scenario_pdu",
    ]


def test_angles_need_units_when_written_as_text():
    assert parse_angle(0.2) == 0.2
    assert parse_angle("10deg") == pytest.approx(math.radians(10.0))
    assert parse_angle(" 0.17 rad") == pytest.approx(0.17)
    with pytest.raises(ConfigError):
        parse_angle("10")
    with pytest.raises(ConfigError):
        parse_angle("tendeg")
    with pytest.raises(ConfigError):
        parse_angle(True)


def test_override_values_parse_as_json_when_possible():
    assert parse_override("gains.kd=40") == ("gains.kd", 40)
    assert parse_override("initial.theta=5deg") == ("initial.theta", "5deg")
    assert parse_override("uncertainty=null") == ("uncertainty", None)
    with pytest.raises(ConfigError):
        parse_override("gains.kd")


def test_apply_overrides_copies_and_validates_keys():
    original = ScenarioDocument.load("paper_scenario_pd").data
    updated = apply_overrides(original, ["gains.kd=40", ("controller", "flpd")])
    assert updated["gains"] == {"kp": 300.0, "kd": 40}
    assert updated["controller"] == "flpd"
    assert original["gains"]["kd"] == 80.0
    with pytest.raises(ConfigError):
        apply_overrides(original, ["gains.ki=1"])
    with pytest.raises(ConfigError):
        apply_overrides(original, ["wind=3"])


def test_override_can_fill_an_empty_section():
    updated = apply_overrides({"uncertainty": None}, ["uncertainty.v_scale=0.8"])
    assert updated["uncertainty"] == {"v_scale": 0.8}


def test_bundled_document_builds_table_scenario():
    sc = load_scenario("paper_scenario_pdflu.json")
    assert sc.controller is ControllerKind.FLPD
    assert sc.params_actual.M == pytest.approx(2.1584)
    assert sc.theta0_init == pytest.approx(math.radians(10.0))
    assert sc.theta_dot0_init == 0.0
    assert sc.uncertainty.v_scale == 0.8
    assert sc.estimated_params.m == 11.2
    assert sc.coupling_sign is CouplingSign.PAPER
    assert sc.capsize_angle == pytest.approx(math.pi / 2)
    assert sc.n_steps == 20000
    assert len(sc.trace) == 20001


def test_overrides_reach_the_scenario():
    sc = load_scenario("paper_scenario_pd", ["horizon=2", "initial.theta=5deg", "coupling_sign=oracle", "capsize_angle=null"])
    assert sc.horizon == 2.0
    assert sc.theta0_init == pytest.approx(math.radians(5.0))
    assert sc.coupling_sign is CouplingSign.ORACLE
    assert sc.capsize_angle is None


def test_invalid_gain_is_a_domain_error():
    with pytest.raises(DomainError):
        load_scenario("paper_scenario_pd", ["gains.kd=0", "horizon=0.1"])


def test_bad_enum_is_a_config_error():
    with pytest.raises(ConfigError):
        load_scenario("paper_scenario_pd", ["controller=lqr", "horizon=0.1"])


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        ScenarioDocument.load(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        ScenarioDocument.load(broken)
    future = tmp_path / "future.json"
    future.write_text(json.dumps({"schema": 2}), encoding="utf-8")
    with pytest.raises(ConfigError):
        ScenarioDocument.load(future)


def test_missing_section_is_a_config_error():
    with pytest.raises(ConfigError):
        ScenarioDocument.from_dict({"schema": 1, "gains": {"kp": 1.0, "kd": 1.0}}).build()


def test_relative_tables_resolve_next_to_the_scenario(tmp_path):
    (tmp_path / "path.csv").write_text("x,y\n0,0\n10,0\n20,0\n30,0\n", encoding="utf-8")
    (tmp_path / "speed.csv").write_text("t,v\n0,2\n2,2\n", encoding="utf-8")
    document = ScenarioDocument.load("paper_scenario_pd").data
    document.update(
        path={"kind": "waypoint-table", "file": "path.csv"},
        speed={"kind": "table", "file": "speed.csv"},
        horizon=2.0,
    )
    scenario_path = tmp_path / "custom.json"
    scenario_path.write_text(json.dumps(document), encoding="utf-8")

    sc = load_scenario(scenario_path)
    assert sc.trace.v[0] == 2.0
    assert max(abs(delta) for delta in sc.trace.delta) == pytest.approx(0.0, abs=1e-12)


def test_signal_file_bypasses_the_planner(tmp_path):
    (tmp_path / "signal.csv").write_text("t,v,delta\n0,1,0\n1,2,0.1\n", encoding="utf-8")
    document = ScenarioDocument.load("paper_scenario_pd").data
    document.update(signal={"file": "signal.csv", "dt": 0.01}, horizon=1.0)
    scenario_path = tmp_path / "signal.json"
    scenario_path.write_text(json.dumps(document), encoding="utf-8")

    sc = load_scenario(scenario_path)
    assert len(sc.trace) == 101
    assert sc.trace.delta_dot[50] == pytest.approx(0.1)


def test_read_csv_table_reports_missing_columns(tmp_path):
    table = tmp_path / "table.csv"
    table.write_text("t,v\n0,1\n", encoding="utf-8")
    assert read_csv_table(table, ("t", "v")) == [(0.0, 1.0)]
    with pytest.raises(ConfigError):
        read_csv_table(table, ("t", "v", "delta"))
    with pytest.raises(ConfigError):
        read_csv_table(tmp_path / "absent.csv", ("t",))
