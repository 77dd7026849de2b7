"""Fixed-step closed-loop integration of the balancing subsystem."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, List, Tuple

import numpy as np

from ..control import (
    estimate_cg,
    flpd_torque,
    k_from_lambda,
    lambda_midpoint,
    lyapunov_v1,
    lyapunov_v2,
    pd_torque,
    residual_decomposition,
    theta_bound,
    theta_dot_bound,
)
from ..dynamics import CouplingSign, roll_accel, torque_decomposition, yaw_rates
from ..entities import (
    DomainError,
    Gains,
    PlannerSample,
    RollState,
    ScooterParams,
    TorqueDecomposition,
    UncertaintyConfig,
)
from ..planner import SignalTrace

logger = logging.getLogger(__name__)


class ControllerKind(str, Enum):
    PD = "pd"
    FLPD = "flpd"
    NONE = "none"


class CapsizeError(RuntimeError):
    """The roll angle reached the capsize angle during a step."""

    def __init__(self, t: float, state: RollState) -> None:
        super().__init__(f"capsized at t={t:.6g} s (theta={state.theta:.6g} rad)")
        self.t = t
        self.state = state


@dataclass(frozen=True)
class Scenario:
    params_actual: ScooterParams
    uncertainty: UncertaintyConfig
    gains: Gains
    controller: ControllerKind
    trace: SignalTrace
    theta0_init: float = math.radians(10.0)
    theta_dot0_init: float = 0.0
    dt: float = 1e-3
    horizon: float = 20.0
    name: str = "scenario"
    coupling_sign: CouplingSign = CouplingSign.PAPER
    hold_period: float | None = None
    capsize_angle: float | None = math.pi / 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "controller", ControllerKind(self.controller))
        object.__setattr__(self, "coupling_sign", CouplingSign(self.coupling_sign))
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be positive, got {self.dt!r}")
        if not self.horizon >= self.dt:
            raise DomainError(f"horizon must be at least dt, got {self.horizon!r}")
        if not abs(self.theta0_init) < math.pi / 2:
            raise DomainError(f"initial roll must satisfy |theta| < pi/2, got {self.theta0_init!r}")
        if not math.isfinite(self.theta_dot0_init):
            raise DomainError("initial roll rate must be finite")
        if self.trace.horizon < self.horizon - 0.5 * self.dt:
            raise DomainError(
                f"signal trace covers {self.trace.horizon:.6g} s, shorter than the horizon {self.horizon:.6g} s"
            )
        if self.hold_period is not None:
            ratio = self.hold_period / self.dt
            if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
                raise DomainError("hold_period must be a positive multiple of dt")
        if self.capsize_angle is not None and not 0 < self.capsize_angle:
            raise DomainError("capsize_angle must be positive")

    @cached_property
    def estimated_params(self) -> ScooterParams:
        return self.uncertainty.estimated_params(self.params_actual)

    @cached_property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @cached_property
    def hold_steps(self) -> int | None:
        if self.hold_period is None:
            return None
        return int(round(self.hold_period / self.dt))


#: Maps (scenario, inputs, state) to the torque coefficients acting on the plant.
Disturbance = Callable[[Scenario, PlannerSample, RollState], TorqueDecomposition]


def plant_disturbance(sc: Scenario, sample: PlannerSample, st: RollState) -> TorqueDecomposition:
    p = sc.params_actual
    return torque_decomposition(p, yaw_rates(p, sample), sample.v, st.theta, sc.coupling_sign)


def _estimate(sc: Scenario, sample: PlannerSample, st: RollState) -> Tuple[float, float]:
    return estimate_cg(sc.uncertainty, sc.estimated_params, sample, st, sc.coupling_sign)


def residual_disturbance(sc: Scenario, sample: PlannerSample, st: RollState) -> TorqueDecomposition:
    """The plant seen through FL-PD: (C - C_hat, G - G_hat)."""

    c_hat, g_hat = _estimate(sc, sample, st)
    return residual_decomposition(plant_disturbance(sc, sample, st), c_hat, g_hat)


def controller_torque(sc: Scenario, sample: PlannerSample, st: RollState) -> float:
    if sc.controller is ControllerKind.PD:
        return pd_torque(sc.gains, st)
    if sc.controller is ControllerKind.FLPD:
        c_hat, g_hat = _estimate(sc, sample, st)
        return flpd_torque(sc.gains, st, c_hat, g_hat)
    return 0.0


def step(
    sc: Scenario,
    st: RollState,
    t: float,
    *,
    disturbance: Disturbance = plant_disturbance,
    held_tau: float | None = None,
) -> RollState:
    """Advance (theta, theta_dot) by one classic RK4 step of ``sc.dt``.

    Inputs are interpolated at the stage times and the controller torque is
    recomputed per stage unless ``held_tau`` is given.
    """

    p = sc.params_actual

    def rates(theta: float, theta_dot: float, time: float) -> Tuple[float, float]:
        state = RollState(theta, theta_dot)
        sample = sc.trace.at(time)
        tau = held_tau if held_tau is not None else controller_torque(sc, sample, state)
        return theta_dot, roll_accel(p, state, disturbance(sc, sample, state), tau)

    h = sc.dt
    k1 = rates(st.theta, st.theta_dot, t)
    k2 = rates(st.theta + 0.5 * h * k1[0], st.theta_dot + 0.5 * h * k1[1], t + 0.5 * h)
    k3 = rates(st.theta + 0.5 * h * k2[0], st.theta_dot + 0.5 * h * k2[1], t + 0.5 * h)
    k4 = rates(st.theta + h * k3[0], st.theta_dot + h * k3[1], t + h)
    theta = st.theta + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    theta_dot = st.theta_dot + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    new_state = RollState(theta, theta_dot)
    if sc.capsize_angle is not None and abs(theta) >= sc.capsize_angle:
        raise CapsizeError(t + h, new_state)
    return new_state


@dataclass(frozen=True)
class TrajectorySample:
    """One recorded instant.

    ``C``, ``G`` and ``U`` are the coefficients the PD part of the loop has to
    reject: the plant's for PD and open loop, the estimation residual for FL-PD.
    The bounds are evaluated with that instantaneous U.
    """

    t: float
    theta: float
    theta_dot: float
    tau: float
    v: float
    delta: float
    psi_dot: float
    psi_ddot: float
    C: float
    G: float
    U: float
    theta_bound: float
    theta_dot_bound: float
    V1: float
    V2: float


@dataclass(frozen=True)
class Trajectory:
    scenario_name: str
    controller: ControllerKind
    gains: Gains
    M: float
    lambda_v2: float
    K_v2: float
    samples: Tuple[TrajectorySample, ...]
    capsized: bool = False
    capsize_time: float | None = None
    dt: float = 1e-3
    theta_dot0: float = 0.0
    coupling_sign: CouplingSign = CouplingSign.PAPER
    input_max_abs_v_dot: float = 0.0

    def __len__(self) -> int:
        return len(self.samples)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(sample, name) for sample in self.samples])

    @property
    def u_max(self) -> float:
        """Supremum of the recorded U over the executed horizon."""
        return max(sample.U for sample in self.samples)

    @property
    def theta_band(self) -> float:
        return theta_bound(self.u_max, self.gains, self.M)

    @property
    def theta_dot_band(self) -> float:
        return theta_dot_bound(self.u_max, self.gains)


def _record(
    sc: Scenario,
    st: RollState,
    t: float,
    tau: float,
    disturbance: Disturbance,
    lam: float,
    k_v2: float,
) -> TrajectorySample:
    p = sc.params_actual
    sample = sc.trace.at(t)
    yr = yaw_rates(p, sample)
    if sc.controller is ControllerKind.FLPD:
        acting = residual_disturbance(sc, sample, st) if disturbance is plant_disturbance else disturbance(sc, sample, st)
    else:
        acting = disturbance(sc, sample, st)
    M = p.M
    return TrajectorySample(
        t=t,
        theta=st.theta,
        theta_dot=st.theta_dot,
        tau=tau,
        v=sample.v,
        delta=sample.delta,
        psi_dot=yr.psi_dot,
        psi_ddot=yr.psi_ddot,
        C=acting.C,
        G=acting.G,
        U=acting.U,
        theta_bound=theta_bound(acting.U, sc.gains, M),
        theta_dot_bound=theta_dot_bound(acting.U, sc.gains),
        V1=lyapunov_v1(sc.gains, M, st),
        V2=lyapunov_v2(sc.gains, M, k_v2, lam, st),
    )


def run(sc: Scenario, *, disturbance: Disturbance = plant_disturbance) -> Trajectory:
    """Integrate the closed loop over the horizon and record every step.

    A capsize truncates the record at the last upright state.
    """

    M = sc.params_actual.M
    lam = lambda_midpoint(sc.gains, M)
    k_v2 = k_from_lambda(sc.gains, M, lam)
    logger.info(
        "running %s (%s): %d steps of %g s, theta_dot(0) = %g rad/s",
        sc.name,
        sc.controller.value,
        sc.n_steps,
        sc.dt,
        sc.theta_dot0_init,
    )

    st = RollState(sc.theta0_init, sc.theta_dot0_init)
    samples: List[TrajectorySample] = []
    capsize_time: float | None = None
    held: float | None = None
    for k in range(sc.n_steps + 1):
        t = k * sc.dt
        if sc.hold_steps is not None and k % sc.hold_steps == 0:
            held = controller_torque(sc, sc.trace.at(t), st)
        tau = held if held is not None else controller_torque(sc, sc.trace.at(t), st)
        samples.append(_record(sc, st, t, tau, disturbance, lam, k_v2))
        if k == sc.n_steps:
            break
        try:
            st = step(sc, st, t, disturbance=disturbance, held_tau=held)
        except CapsizeError as exc:
            capsize_time = exc.t
            logger.warning("%s: %s", sc.name, exc)
            break

    trajectory = Trajectory(
        scenario_name=sc.name,
        controller=sc.controller,
        gains=sc.gains,
        M=M,
        lambda_v2=lam,
        K_v2=k_v2,
        samples=tuple(samples),
        capsized=capsize_time is not None,
        capsize_time=capsize_time,
        dt=sc.dt,
        theta_dot0=sc.theta_dot0_init,
        coupling_sign=sc.coupling_sign,
        input_max_abs_v_dot=sc.trace.max_abs_v_dot,
    )
    logger.info("%s finished: %d samples, U_max = %.6g N m", sc.name, len(trajectory), trajectory.u_max)
    return trajectory
