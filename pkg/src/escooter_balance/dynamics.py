"""Closed-form roll dynamics of the e-scooter and its energy-based oracle.

The roll equation is

    M theta_ddot = tau + C cos(theta) + G sin(theta) = tau + U sin(theta + theta0)

with M = I_theta + m h^2, G = m g h and a coupling coefficient C that depends
on the yaw motion dictated by speed and steering.  ``euler_lagrange_residual``
rebuilds the left-hand side numerically from the Lagrangian so the closed form
can be checked independently.
"""
from __future__ import annotations

import math
from enum import Enum
from typing import Callable, Tuple

from .entities import (
    DomainError,
    PlannerSample,
    RollState,
    ScooterParams,
    TorqueDecomposition,
    YawRates,
)

#: Central-difference step for the partial derivative of L with respect to theta.
FD_STEP = 1e-6
#: Step for the momentum partial and its directional time derivative.  L is
#: quadratic in theta_dot, so the momentum difference quotient is exact and a
#: larger step keeps the nested quotient clear of round-off.
FD_RATE_STEP = 1e-3


class CouplingSign(str, Enum):
    """Sign of the h psi_dot sin(theta) term inside C.

    ``PAPER`` is C = m h r psi_ddot + m h psi_dot (v - h psi_dot sin(theta)),
    ``ORACLE`` flips the inner sign to ``+``.
    """

    PAPER = "paper"
    ORACLE = "oracle"


def yaw_rates(p: ScooterParams, s: PlannerSample) -> YawRates:
    """Yaw rate and acceleration from the rear-wheel instantaneous center."""

    if not abs(s.delta) < math.pi / 2:
        raise DomainError(f"steering angle must satisfy |delta| < pi/2, got {s.delta!r}")
    tan_delta = math.tan(s.delta)
    ratio = s.v / p.w_b
    psi_dot = ratio * tan_delta
    psi_ddot = ratio * s.delta_dot * (1.0 + tan_delta * tan_delta) + (s.v_dot / p.w_b) * tan_delta
    return YawRates(psi_dot=psi_dot, psi_ddot=psi_ddot)


def coupling_coefficient(
    p: ScooterParams,
    yr: YawRates,
    v: float,
    theta: float,
    sign: CouplingSign = CouplingSign.PAPER,
) -> float:
    """The roll-coupling coefficient C."""

    lean = p.h * yr.psi_dot * math.sin(theta)
    inner = v - lean if sign is CouplingSign.PAPER else v + lean
    return p.m * p.h * p.r * yr.psi_ddot + p.m * p.h * yr.psi_dot * inner


def torque_decomposition(
    p: ScooterParams,
    yr: YawRates,
    v: float,
    theta: float,
    sign: CouplingSign = CouplingSign.PAPER,
) -> TorqueDecomposition:
    c = coupling_coefficient(p, yr, v, theta, sign)
    g = p.m * p.g * p.h
    return TorqueDecomposition.from_coefficients(c, g)


def roll_accel(p: ScooterParams, st: RollState, td: TorqueDecomposition, tau: float) -> float:
    """Angular roll acceleration for the applied external torque ``tau``."""

    return (tau + td.C * math.cos(st.theta) + td.G * math.sin(st.theta)) / p.M


def com_velocity(
    p: ScooterParams,
    st: RollState,
    psi: float,
    psi_dot: float,
    v: float,
) -> Tuple[float, float, float]:
    """Inertial velocity of the center of mass for a rear contact moving at ``v``."""

    sin_t, cos_t = math.sin(st.theta), math.cos(st.theta)
    sin_p, cos_p = math.sin(psi), math.cos(psi)
    px_dot = v * cos_p
    py_dot = v * sin_p
    vx = px_dot - p.r * psi_dot * sin_p + p.h * st.theta_dot * cos_t * sin_p + p.h * psi_dot * sin_t * cos_p
    vy = py_dot + p.r * psi_dot * cos_p - p.h * st.theta_dot * cos_t * cos_p + p.h * psi_dot * sin_t * sin_p
    vz = -p.h * st.theta_dot * sin_t
    return vx, vy, vz


def lagrangian(
    p: ScooterParams,
    st: RollState,
    psi: float,
    psi_dot: float,
    v: float,
) -> float:
    """L = T - W with kinetic energy of the COM, roll and yaw rotation."""

    vx, vy, vz = com_velocity(p, st, psi, psi_dot, v)
    kinetic = (
        0.5 * p.m * (vx * vx + vy * vy + vz * vz)
        + 0.5 * p.I_theta * st.theta_dot**2
        + 0.5 * p.I_psi * psi_dot**2
    )
    return kinetic - p.m * p.g * p.h * math.cos(st.theta)


def _central(f: Callable[[float], float], x: float, step: float) -> float:
    return (f(x + step) - f(x - step)) / (2.0 * step)


def _richardson(f: Callable[[float], float], x: float, step: float) -> float:
    coarse = _central(f, x, step)
    fine = _central(f, x, step / 2.0)
    return (4.0 * fine - coarse) / 3.0


def euler_lagrange_residual(
    p: ScooterParams,
    st: RollState,
    theta_ddot: float,
    inputs: PlannerSample,
    psi: float,
    *,
    step: float = FD_STEP,
    rate_step: float = FD_RATE_STEP,
) -> float:
    """Numeric d/dt(dL/d theta_dot) - dL/d theta, the torque the motion requires.

    Only ``lagrangian`` is evaluated.  The time derivative is the directional
    derivative of the momentum along (theta_dot, theta_ddot, psi_dot, psi_ddot,
    v_dot), which is the chain rule written as one difference quotient.
    """

    yr = yaw_rates(p, inputs)
    v = inputs.v

    def lag(theta: float, theta_dot: float, psi_: float, psi_dot: float, v_: float) -> float:
        return lagrangian(p, RollState(theta, theta_dot), psi_, psi_dot, v_)

    dl_dtheta = _central(lambda x: lag(x, st.theta_dot, psi, yr.psi_dot, v), st.theta, step)

    def momentum(tau: float) -> float:
        theta = st.theta + tau * st.theta_dot
        theta_dot = st.theta_dot + tau * theta_ddot
        psi_ = psi + tau * yr.psi_dot
        psi_dot = yr.psi_dot + tau * yr.psi_ddot
        v_ = v + tau * inputs.v_dot
        return _central(lambda x: lag(theta, x, psi_, psi_dot, v_), theta_dot, rate_step)

    d_momentum = _richardson(momentum, 0.0, rate_step)
    return d_momentum - dl_dtheta


def closed_form_residual(
    p: ScooterParams,
    st: RollState,
    theta_ddot: float,
    inputs: PlannerSample,
    sign: CouplingSign = CouplingSign.PAPER,
) -> float:
    """M theta_ddot - C cos(theta) - G sin(theta) for the chosen coupling sign."""

    td = torque_decomposition(p, yaw_rates(p, inputs), inputs.v, st.theta, sign)
    return p.M * theta_ddot - td.C * math.cos(st.theta) - td.G * math.sin(st.theta)
