from __future__ import annotations

import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from escooter_balance.data_loader import load_scenario
from escooter_balance.sim.engine import run
from escooter_balance.sim.export import rear_wheel_path, write_comparison_plot, write_inputs_plot

SRC = Path(__file__).resolve().parents[1] / "src"
CIRCLE = ["path.kind=constant-steer", "path.delta=0.1", "speed.kind=constant", "speed.v0=3", "horizon=4"]


def test_constant_steer_path_is_a_circle():
    traj = run(load_scenario("paper_scenario_pd", CIRCLE))
    x, y = rear_wheel_path(traj)
    radius = 0.84 / math.tan(0.1)
    assert (x[0], y[0]) == (0.0, 0.0)
    assert np.max(np.abs(np.hypot(x, y - radius) - radius)) < 1e-4 * radius


def test_comparison_plot_overlays_each_run(tmp_path):
    runs = [run(load_scenario(name, ["horizon=0.5"])) for name in ("paper_scenario_pd", "paper_scenario_pdflu")]
    first = write_comparison_plot(runs, tmp_path / "a.svg").read_bytes()
    second = write_comparison_plot(runs, tmp_path / "b.svg").read_bytes()
    assert first == second
    assert first.lstrip().startswith(b"<?xml")
    with pytest.raises(ValueError):
        write_comparison_plot([], tmp_path / "empty.svg")


def test_inputs_plot_is_written(tmp_path):
    traj = run(load_scenario("paper_scenario_pd", ["horizon=0.5"]))
    path = write_inputs_plot(traj, tmp_path / "inputs.svg")
    assert path.read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_import_leaves_the_matplotlib_backend_alone():
    code = "import matplotlib; matplotlib.use('svg'); import escooter_balance; print(matplotlib.get_backend())"
    env = {**os.environ, "PYTHONPATH": str(SRC)}
    result = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    assert result.stdout.strip() == "svg"
