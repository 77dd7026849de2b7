"""Boundedness and Lyapunov checks evaluated on recorded trajectories."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, Sequence, Tuple

from ..control import lambda_admissible_range, lyapunov_v1_rate, lyapunov_v2_rate
from ..entities import RollState, TorqueDecomposition
from .engine import Trajectory

BAND_RTOL = 1e-9
BAND_ATOL = 1e-12


class BoundKind(str, Enum):
    THETA = "theta"
    THETA_DOT = "theta_dot"


@dataclass(frozen=True)
class BoundVerdict:
    """Entry into and containment within an ultimate-bound band."""

    entered: bool
    t_entry: float | None
    contained: bool
    max_violation: float
    band: float


def check_bounds(
    traj: Trajectory,
    which: BoundKind | str,
    *,
    rtol: float = BAND_RTOL,
    atol: float = BAND_ATOL,
) -> BoundVerdict:
    """Find the first sample inside the U_max band and test every later one.

    "Never entered" is a valid verdict with ``contained=False``.
    """

    kind = BoundKind(which)
    if kind is BoundKind.THETA:
        band = traj.theta_band
        values = [abs(sample.theta) for sample in traj.samples]
    else:
        band = traj.theta_dot_band
        values = [abs(sample.theta_dot) for sample in traj.samples]
    limit = band * (1.0 + rtol) + atol

    entry = next((i for i, value in enumerate(values) if value <= limit), None)
    if entry is None:
        return BoundVerdict(False, None, False, max(values) - band, band)
    after = values[entry:]
    peak = max(after)
    return BoundVerdict(
        entered=True,
        t_entry=traj.samples[entry].t,
        contained=peak <= limit,
        max_violation=max(0.0, peak - band),
        band=band,
    )


@dataclass(frozen=True)
class LyapunovReport:
    """Counts of samples outside a band and of those where V did not decrease."""

    v1_checked: int
    v1_violations: int
    v2_checked: int
    v2_violations: int
    lambdas: Tuple[float, ...]

    @property
    def clean(self) -> bool:
        return self.v1_violations == 0 and self.v2_violations == 0


def check_lyapunov_decrease(traj: Trajectory, lambdas: Sequence[float] | None = None) -> LyapunovReport:
    """Evaluate dV1/dt where |theta_dot| > U_max/kd and dV2/dt where |theta| > theta band.

    The rates use the PD closed-loop forms with the recorded (C, G), so they
    apply to PD runs and, through the residual, to FL-PD runs.  ``lambdas``
    defaults to the midpoint of the admissible range.
    """

    if lambdas is None:
        lambdas = (traj.lambda_v2,)
    _, upper = lambda_admissible_range(traj.gains, traj.M)
    lambdas = tuple(lambdas)
    for lam in lambdas:
        if not 0 < lam < upper:
            raise ValueError(f"lambda={lam!r} outside the open admissible range (0, {upper})")

    rate_band = traj.theta_dot_band
    angle_band = traj.theta_band
    v1_checked = v1_bad = v2_checked = v2_bad = 0
    for sample in traj.samples:
        st = RollState(sample.theta, sample.theta_dot)
        td = TorqueDecomposition.from_coefficients(sample.C, sample.G)
        if abs(sample.theta_dot) > rate_band:
            v1_checked += 1
            if not lyapunov_v1_rate(traj.gains, st, td) < 0:
                v1_bad += 1
        if abs(sample.theta) > angle_band:
            for lam in lambdas:
                v2_checked += 1
                if not lyapunov_v2_rate(traj.gains, traj.M, lam, st, td) < 0:
                    v2_bad += 1
    return LyapunovReport(v1_checked, v1_bad, v2_checked, v2_bad, lambdas)


def pendulum_energy(M: float, G: float, st: RollState) -> float:
    """Energy of the unforced inverted pendulum, 1/2 M theta_dot^2 + G cos(theta)."""

    return 0.5 * M * st.theta_dot**2 + G * math.cos(st.theta)


@dataclass(frozen=True)
class TrajectorySummary:
    scenario: str
    controller: str
    samples: int
    capsized: bool
    capsize_time: float | None
    u_max: float
    theta_band: float
    theta_dot_band: float
    theta: BoundVerdict
    theta_dot: BoundVerdict
    sup_theta: float
    sup_theta_after_entry: float | None
    sup_theta_dot: float
    lyapunov: LyapunovReport
    max_abs_v_dot: float
    lambda_v2: float
    K_v2: float
    theta_dot0: float
    coupling_sign: str

    def to_dict(self) -> Dict[str, Any]:
        payload = asdict(self)
        payload["lyapunov"]["lambdas"] = list(self.lyapunov.lambdas)
        return payload


def summarize(traj: Trajectory) -> TrajectorySummary:
    theta_verdict = check_bounds(traj, BoundKind.THETA)
    rate_verdict = check_bounds(traj, BoundKind.THETA_DOT)
    thetas = [abs(sample.theta) for sample in traj.samples]
    sup_after = None
    if theta_verdict.entered:
        sup_after = max(abs(s.theta) for s in traj.samples if s.t >= theta_verdict.t_entry)
    return TrajectorySummary(
        scenario=traj.scenario_name,
        controller=traj.controller.value,
        samples=len(traj),
        capsized=traj.capsized,
        capsize_time=traj.capsize_time,
        u_max=traj.u_max,
        theta_band=traj.theta_band,
        theta_dot_band=traj.theta_dot_band,
        theta=theta_verdict,
        theta_dot=rate_verdict,
        sup_theta=max(thetas),
        sup_theta_after_entry=sup_after,
        sup_theta_dot=max(abs(sample.theta_dot) for sample in traj.samples),
        lyapunov=check_lyapunov_decrease(traj),
        max_abs_v_dot=traj.input_max_abs_v_dot,
        lambda_v2=traj.lambda_v2,
        K_v2=traj.K_v2,
        theta_dot0=traj.theta_dot0,
        coupling_sign=traj.coupling_sign.value,
    )
