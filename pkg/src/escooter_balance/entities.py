"""Domain models for the self-balancing e-scooter."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, Mapping


class DomainError(ValueError):
    """Raised when a value falls outside the physical or mathematical domain."""


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ScooterParams:
    """Physical constants of the vehicle.

    ``I_psi`` only enters the kinetic energy and cancels from the roll
    equation; it is carried for the energy-based oracle.
    """

    m: float
    h: float
    r: float
    w_b: float
    I_theta: float
    I_psi: float = 0.0
    g: float = 9.81

    def __post_init__(self) -> None:
        _require_finite(m=self.m, h=self.h, r=self.r, w_b=self.w_b, I_theta=self.I_theta, I_psi=self.I_psi, g=self.g)
        for name in ("m", "h", "r", "w_b", "I_theta", "g"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be strictly positive, got {getattr(self, name)!r}")
        if self.I_psi < 0:
            raise DomainError(f"I_psi must be non-negative, got {self.I_psi!r}")

    @property
    def M(self) -> float:
        """Roll inertia about the rear contact line, I_theta + m h^2."""
        return self.I_theta + self.m * self.h**2

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "ScooterParams":
        return cls(
            m=float(data["m"]),
            h=float(data["h"]),
            r=float(data["r"]),
            w_b=float(data["w_b"]),
            I_theta=float(data["I_theta"]),
            I_psi=float(data.get("I_psi", 0.0)),
            g=float(data.get("g", 9.81)),
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "m": self.m,
            "h": self.h,
            "r": self.r,
            "w_b": self.w_b,
            "I_theta": self.I_theta,
            "I_psi": self.I_psi,
            "g": self.g,
        }


@dataclass(frozen=True)
class PlannerSample:
    """Time-stamped planner inputs (v, v_dot, delta, delta_dot)."""

    t: float
    v: float
    v_dot: float
    delta: float
    delta_dot: float

    def __post_init__(self) -> None:
        _require_finite(t=self.t, v=self.v, v_dot=self.v_dot, delta=self.delta, delta_dot=self.delta_dot)
        if abs(self.delta) >= math.pi / 2:
            raise DomainError(f"steering angle must satisfy |delta| < pi/2, got {self.delta!r}")


@dataclass(frozen=True)
class YawRates:
    psi_dot: float
    psi_ddot: float


@dataclass(frozen=True)
class RollState:
    """Balancing subsystem state; theta = 0 is upright."""

    theta: float
    theta_dot: float

    def __post_init__(self) -> None:
        _require_finite(theta=self.theta, theta_dot=self.theta_dot)


@dataclass(frozen=True)
class TorqueDecomposition:
    """Coefficients of C cos(theta) + G sin(theta) = U sin(theta + theta0)."""

    C: float
    G: float
    U: float
    theta0: float

    @classmethod
    def from_coefficients(cls, c: float, g: float) -> "TorqueDecomposition":
        _require_finite(C=c, G=g)
        if g > 0:
            theta0 = math.atan(c / g)
        else:
            # residual decompositions may carry G <= 0
            theta0 = math.atan2(c, g)
        return cls(C=c, G=g, U=math.hypot(c, g), theta0=theta0)


@dataclass(frozen=True)
class Gains:
    """PD gains; both must be strictly positive."""

    kp: float
    kd: float

    def __post_init__(self) -> None:
        _require_finite(kp=self.kp, kd=self.kd)
        if self.kp <= 0 or self.kd <= 0:
            raise DomainError(f"gains must be positive, got kp={self.kp!r}, kd={self.kd!r}")

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "Gains":
        return cls(kp=float(data["kp"]), kd=float(data["kd"]))


@dataclass(frozen=True)
class UncertaintyConfig:
    """Controller-side measurement scaling and parameter estimates.

    ``None`` for an estimate means the controller knows the actual value.
    """

    v_scale: float = 1.0
    m_est: float | None = None
    h_est: float | None = None
    r_est: float | None = None
    delta_scale: float = 1.0

    def __post_init__(self) -> None:
        _require_finite(v_scale=self.v_scale, delta_scale=self.delta_scale)
        for name in ("m_est", "h_est", "r_est"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be strictly positive, got {value!r}")

    @classmethod
    def exact(cls) -> "UncertaintyConfig":
        return cls()

    @property
    def is_exact(self) -> bool:
        return (
            self.v_scale == 1.0
            and self.delta_scale == 1.0
            and self.m_est is None
            and self.h_est is None
            and self.r_est is None
        )

    def estimated_params(self, actual: ScooterParams) -> ScooterParams:
        """Return the parameters the controller believes in."""
        return replace(
            actual,
            m=actual.m if self.m_est is None else self.m_est,
            h=actual.h if self.h_est is None else self.h_est,
            r=actual.r if self.r_est is None else self.r_est,
        )

    def measure(self, sample: PlannerSample) -> PlannerSample:
        """Apply the measurement scaling to planner inputs."""
        if self.v_scale == 1.0 and self.delta_scale == 1.0:
            return sample
        return PlannerSample(
            t=sample.t,
            v=self.v_scale * sample.v,
            v_dot=self.v_scale * sample.v_dot,
            delta=self.delta_scale * sample.delta,
            delta_dot=self.delta_scale * sample.delta_dot,
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, object] | None) -> "UncertaintyConfig":
        if not data:
            return cls()

        def _optional(key: str) -> float | None:
            value = data.get(key)
            return None if value is None else float(value)

        return cls(
            v_scale=float(data.get("v_scale", 1.0)),
            m_est=_optional("m_est"),
            h_est=_optional("h_est"),
            r_est=_optional("r_est"),
            delta_scale=float(data.get("delta_scale", 1.0)),
        )

    def to_dict(self) -> Dict[str, float | None]:
        return {
            "v_scale": self.v_scale,
            "m_est": self.m_est,
            "h_est": self.h_est,
            "r_est": self.r_est,
            "delta_scale": self.delta_scale,
        }


@dataclass(frozen=True)
class BoundReport:
    """Analytic ultimate bounds evaluated for one value of U."""

    theta_dot_max: float
    theta_max: float
    delta_disc: float
    lambda_max: float
    u_used: float
