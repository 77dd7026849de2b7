"""Trajectory persistence: CSV table, JSON summary and static SVG figures."""
from __future__ import annotations

import csv
import io
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .engine import ControllerKind, Trajectory
from .monitor import TrajectorySummary, summarize

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "t",
    "theta",
    "theta_dot",
    "tau",
    "v",
    "delta",
    "psi_dot",
    "psi_ddot",
    "C",
    "G",
    "U",
    "theta_bound",
    "theta_dot_bound",
    "V1",
    "V2",
)
_SVG_SALT = "escooter-balance"
_PALETTE = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple", "tab:brown")


class Emit(str, Enum):
    CSV = "csv"
    SVG = "svg"
    SUMMARY = "summary"


def format_float(value: float) -> str:
    return f"{value:.17g}"


def render_trajectory_csv(traj: Trajectory) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for sample in traj.samples:
        writer.writerow([format_float(getattr(sample, name)) for name in CSV_HEADER])
    return buffer.getvalue()


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    destination = Path(path)
    destination.write_bytes(render_trajectory_csv(traj).encode("utf-8"))
    return destination


def summary_payload(traj: Trajectory, summary: TrajectorySummary | None = None) -> Dict[str, Any]:
    summary = summary or summarize(traj)
    payload = summary.to_dict()
    payload["metadata"] = {
        "dt": traj.dt,
        "theta_dot0": traj.theta_dot0,
        "theta_dot0_assumed": traj.theta_dot0 == 0.0,
        "coupling_sign": traj.coupling_sign.value,
        "gains": {"kp": traj.gains.kp, "kd": traj.gains.kd},
        "M": traj.M,
    }
    return payload


def write_summary(traj: Trajectory, path: str | Path, summary: TrajectorySummary | None = None) -> Path:
    """Persist the trajectory summary as JSON."""

    destination = Path(path)
    text = json.dumps(summary_payload(traj, summary), indent=2, sort_keys=True)
    destination.write_text(text + "\n", encoding="utf-8")
    return destination


def _save_svg(fig: Figure, path: str | Path) -> Path:
    destination = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT}):
        fig.savefig(destination, format="svg", metadata={"Date": None})
    return destination


def _band_label(traj: Trajectory) -> str:
    # FL-PD records the residual amplitude, so its band is the U-tilde one.
    return "U~_max" if traj.controller is ControllerKind.FLPD else "U_max"


def write_plots(traj: Trajectory, path: str | Path) -> Path:
    """Three stacked panels (theta, theta_dot, tau) with the U_max bands."""

    t = traj.column("t")
    fig = Figure(figsize=(8.0, 9.0))
    ax_theta, ax_rate, ax_tau = fig.subplots(3, 1, sharex=True)

    panels = (
        (ax_theta, "theta", traj.theta_band, r"$\theta$ [rad]"),
        (ax_rate, "theta_dot", traj.theta_dot_band, r"$\dot\theta$ [rad/s]"),
    )
    for ax, column, band, label in panels:
        ax.plot(t, traj.column(column), color="tab:blue", linewidth=1.0, label=traj.controller.value.upper())
        ax.axhline(band, color="tab:red", linestyle="--", linewidth=0.8, label=f"{_band_label(traj)} band")
        ax.axhline(-band, color="tab:red", linestyle="--", linewidth=0.8)
        ax.set_ylabel(label)
        ax.grid(True, linewidth=0.3)
    ax_theta.legend(loc="upper right")
    ax_tau.plot(t, traj.column("tau"), color="tab:green", linewidth=1.0)
    ax_tau.set_ylabel(r"$\tau_\theta$ [N m]")
    ax_tau.set_xlabel("t [s]")
    ax_tau.grid(True, linewidth=0.3)
    fig.suptitle(traj.scenario_name)
    fig.tight_layout()
    return _save_svg(fig, path)


def write_comparison_plot(trajectories: Sequence[Trajectory], path: str | Path) -> Path:
    """Overlay several runs on shared theta, theta_dot and tau panels.

    Each run gets its own colour and its own dashed band: the U_max band for
    PD runs and the residual U~_max band for FL-PD runs.
    """

    if not trajectories:
        raise ValueError("comparison needs at least one trajectory")
    fig = Figure(figsize=(9.0, 10.0))
    ax_theta, ax_rate, ax_tau = fig.subplots(3, 1, sharex=True)
    for index, traj in enumerate(trajectories):
        color = _PALETTE[index % len(_PALETTE)]
        t = traj.column("t")
        name = traj.scenario_name
        ax_theta.plot(t, traj.column("theta"), color=color, linewidth=1.0, label=name)
        ax_rate.plot(t, traj.column("theta_dot"), color=color, linewidth=1.0, label=name)
        ax_tau.plot(t, traj.column("tau"), color=color, linewidth=1.0, label=name)
        for ax, band, symbol in ((ax_theta, traj.theta_band, "|theta|"), (ax_rate, traj.theta_dot_band, "|theta_dot|")):
            ax.axhline(band, color=color, linestyle="--", linewidth=0.8, label=f"{symbol} max ({name}, {_band_label(traj)})")
            ax.axhline(-band, color=color, linestyle="--", linewidth=0.8)
    ax_theta.set_ylabel(r"$\theta$ [rad]")
    ax_rate.set_ylabel(r"$\dot\theta$ [rad/s]")
    ax_tau.set_ylabel(r"$\tau_\theta$ [N m]")
    ax_tau.set_xlabel("t [s]")
    for ax in (ax_theta, ax_rate, ax_tau):
        ax.grid(True, linewidth=0.3)
        ax.legend(loc="upper right", fontsize="x-small")
    fig.tight_layout()
    return _save_svg(fig, path)


def rear_wheel_path(traj: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
    """Planar rear-wheel path rebuilt from the recorded v and yaw rate.

    Starts at the origin heading along +x; heading and position are
    trapezoid integrals over the sample grid.
    """

    t = traj.column("t")
    v = traj.column("v")
    if len(t) < 2:
        return np.zeros(len(t)), np.zeros(len(t))
    steps = np.diff(t)

    def integrate(rate: np.ndarray) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * steps)))

    psi = integrate(traj.column("psi_dot"))
    return integrate(v * np.cos(psi)), integrate(v * np.sin(psi))


def write_inputs_plot(traj: Trajectory, path: str | Path) -> Path:
    """Driven path next to the speed and steering signals fed to the plant."""

    t = traj.column("t")
    x, y = rear_wheel_path(traj)
    fig = Figure(figsize=(11.0, 6.0))
    grid = fig.add_gridspec(2, 2, width_ratios=(1.2, 1.0))
    ax_path = fig.add_subplot(grid[:, 0])
    ax_speed = fig.add_subplot(grid[0, 1])
    ax_steer = fig.add_subplot(grid[1, 1], sharex=ax_speed)

    ax_path.plot(x, y, color="tab:blue", linewidth=1.0)
    ax_path.plot(x[:1], y[:1], marker="o", color="tab:red", linestyle="none", label="start")
    ax_path.set_aspect("equal", adjustable="datalim")
    ax_path.set_xlabel("x [m]")
    ax_path.set_ylabel("y [m]")
    ax_path.legend(loc="upper right")
    ax_speed.plot(t, traj.column("v"), color="tab:green", linewidth=1.0)
    ax_speed.set_ylabel("v [m/s]")
    ax_steer.plot(t, traj.column("delta"), color="tab:purple", linewidth=1.0)
    ax_steer.set_ylabel(r"$\delta$ [rad]")
    ax_steer.set_xlabel("t [s]")
    for ax in (ax_path, ax_speed, ax_steer):
        ax.grid(True, linewidth=0.3)
    fig.suptitle(traj.scenario_name)
    fig.tight_layout()
    return _save_svg(fig, path)


def parse_emit(spec: str | Iterable[str]) -> List[Emit]:
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    return [Emit(item.strip()) for item in items if item.strip()]


def save_run(
    traj: Trajectory,
    out_dir: str | Path,
    emit: Iterable[Emit | str] = tuple(Emit),
    summary: TrajectorySummary | None = None,
) -> Dict[Emit, Path]:
    """Write the requested artifacts into ``out_dir`` and return their paths."""

    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    written: Dict[Emit, Path] = {}
    for kind in dict.fromkeys(Emit(item) for item in emit):
        if kind is Emit.CSV:
            written[kind] = write_trajectory_csv(traj, directory / "trajectory.csv")
        elif kind is Emit.SUMMARY:
            written[kind] = write_summary(traj, directory / "summary.json", summary)
        else:
            written[kind] = write_plots(traj, directory / "trajectory.svg")
        logger.info("wrote %s", written[kind])
    return written
