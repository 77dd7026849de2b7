"""PD and feedback-linearized PD balancing laws with their ultimate bounds."""
from __future__ import annotations

import math
from typing import Tuple

from .dynamics import CouplingSign, torque_decomposition, yaw_rates
from .entities import (
    BoundReport,
    DomainError,
    Gains,
    PlannerSample,
    RollState,
    ScooterParams,
    TorqueDecomposition,
    UncertaintyConfig,
)


def pd_torque(g: Gains, st: RollState) -> float:
    return -g.kd * st.theta_dot - g.kp * st.theta


def flpd_torque(g: Gains, st: RollState, c_hat: float, g_hat: float) -> float:
    """PD plus cancellation of the estimated coupling and gravity torques."""

    return pd_torque(g, st) - c_hat * math.cos(st.theta) - g_hat * math.sin(st.theta)


def estimate_cg(
    u: UncertaintyConfig,
    p_est: ScooterParams,
    measured: PlannerSample,
    st: RollState,
    sign: CouplingSign = CouplingSign.PAPER,
) -> Tuple[float, float]:
    """Controller-side (C_hat, G_hat) from scaled measurements and estimated parameters.

    The roll state is taken as exactly measured.
    """

    sample = u.measure(measured)
    td = torque_decomposition(p_est, yaw_rates(p_est, sample), sample.v, st.theta, sign)
    return td.C, td.G


def residual_decomposition(actual: TorqueDecomposition, c_hat: float, g_hat: float) -> TorqueDecomposition:
    """Estimation residual (C - C_hat, G - G_hat) seen by the PD part of FL-PD."""

    return TorqueDecomposition.from_coefficients(actual.C - c_hat, actual.G - g_hat)


def delta_discriminant(g: Gains, M: float) -> float:
    return g.kd**2 + 4.0 * g.kp * M


def theta_dot_bound(u_val: float, g: Gains) -> float:
    """Ultimate bound U/kd on the roll rate."""

    if u_val < 0:
        raise DomainError(f"U must be non-negative, got {u_val!r}")
    return u_val / g.kd


def theta_bound(u_val: float, g: Gains, M: float) -> float:
    """Ultimate bound U (kd + sqrt(Delta)) / (2 kd kp) on the roll angle."""

    if u_val < 0:
        raise DomainError(f"U must be non-negative, got {u_val!r}")
    if M <= 0:
        raise DomainError(f"M must be positive, got {M!r}")
    return u_val * (g.kd + math.sqrt(delta_discriminant(g, M))) / (2.0 * g.kd * g.kp)


def lambda_admissible_range(g: Gains, M: float) -> Tuple[float, float]:
    """Open interval of lambda > 0 for which K = -M lambda^2 + kd lambda + kp > 0.

    The upper end is the smaller of (-kd + sqrt(Delta)) / 2 and the positive
    root (kd + sqrt(Delta)) / (2 M) of K; the first alone lets K go negative
    when M is large next to the gains.
    """

    if M <= 0:
        raise DomainError(f"M must be positive, got {M!r}")
    root = math.sqrt(delta_discriminant(g, M))
    return 0.0, min((-g.kd + root) / 2.0, (g.kd + root) / (2.0 * M))


def lambda_midpoint(g: Gains, M: float) -> float:
    lower, upper = lambda_admissible_range(g, M)
    return 0.5 * (lower + upper)


def k_from_lambda(g: Gains, M: float, lam: float) -> float:
    lower, upper = lambda_admissible_range(g, M)
    slack = 1e-12 * max(1.0, upper)
    if not (lower - slack <= lam <= upper + slack):
        raise DomainError(f"lambda={lam!r} outside admissible range ({lower}, {upper})")
    k = -M * lam**2 + g.kd * lam + g.kp
    if k <= 0:
        raise DomainError(f"K={k!r} is not positive for lambda={lam!r}")
    return k


def lyapunov_v1(g: Gains, M: float, st: RollState) -> float:
    return 0.5 * M * st.theta_dot**2 + 0.5 * g.kp * st.theta**2


def lyapunov_v2(g: Gains, M: float, K: float, lam: float, st: RollState) -> float:
    return 0.5 * M * (st.theta_dot + lam * st.theta) ** 2 + 0.5 * K * st.theta**2


def lyapunov_v1_rate(g: Gains, st: RollState, td: TorqueDecomposition) -> float:
    """dV1/dt along the PD closed loop: -kd theta_dot^2 + U sin(theta + theta0) theta_dot."""

    return -g.kd * st.theta_dot**2 + td.U * math.sin(st.theta + td.theta0) * st.theta_dot


def lyapunov_v2_rate(g: Gains, M: float, lam: float, st: RollState, td: TorqueDecomposition) -> float:
    """dV2/dt along the PD closed loop once K has cancelled the cross term."""

    disturbance = td.U * math.sin(st.theta + td.theta0)
    rate_group = (-g.kd + M * lam) * st.theta_dot**2 + disturbance * st.theta_dot
    angle_group = -g.kp * lam * st.theta**2 + lam * disturbance * st.theta
    return rate_group + angle_group


def bound_report(u_val: float, g: Gains, M: float) -> BoundReport:
    _, upper = lambda_admissible_range(g, M)
    return BoundReport(
        theta_dot_max=theta_dot_bound(u_val, g),
        theta_max=theta_bound(u_val, g, M),
        delta_disc=delta_discriminant(g, M),
        lambda_max=upper,
        u_used=u_val,
    )
