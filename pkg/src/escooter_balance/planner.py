"""Reference signal generation: path and speed profile to (v, v_dot, delta, delta_dot).

Steering follows the kinematic inverse of the yaw map, delta = atan(w_b kappa),
with the path curvature evaluated at the distance travelled, s(t) = int v dt.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence, Tuple

import numpy as np

from .entities import DomainError, PlannerSample

logger = logging.getLogger(__name__)

_GL_NODES, _GL_WEIGHTS = (tuple(float(x) for x in arr) for arr in np.polynomial.legendre.leggauss(8))
_MIN_TANGENT_SQ = 1e-12


class PathKind(str, Enum):
    LEMNISCATE = "lemniscate"
    WAYPOINT_TABLE = "waypoint-table"
    CONSTANT_STEER = "constant-steer"


class SpeedKind(str, Enum):
    PAPER_SINUSOID = "paper-sinusoid"
    CONSTANT = "constant"
    TABLE = "table"


def _as_table(rows: Sequence[Sequence[float]], width: int, label: str) -> Tuple[Tuple[float, ...], ...]:
    table = tuple(tuple(float(value) for value in row) for row in rows)
    for row in table:
        if len(row) != width:
            raise DomainError(f"{label} rows need {width} columns, got {len(row)}")
        if not all(math.isfinite(value) for value in row):
            raise DomainError(f"{label} contains non-finite values")
    return table


@dataclass(frozen=True)
class PathSpec:
    kind: PathKind
    a: float = 15.0
    table: Tuple[Tuple[float, float], ...] = ()
    delta_const: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PathKind(self.kind))
        if self.kind is PathKind.LEMNISCATE and not self.a > 0:
            raise DomainError(f"lemniscate scale must be positive, got {self.a!r}")
        if self.kind is PathKind.WAYPOINT_TABLE:
            table = _as_table(self.table, 2, "waypoint table")
            if len(table) < 3:
                raise DomainError("waypoint table needs at least 3 points")
            object.__setattr__(self, "table", table)
            _table_arc_length(np.asarray(table))
        if self.kind is PathKind.CONSTANT_STEER and not abs(self.delta_const) < math.pi / 2:
            raise DomainError(f"constant steering must satisfy |delta| < pi/2, got {self.delta_const!r}")

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "PathSpec":
        kind = PathKind(str(data["kind"]))
        return cls(
            kind=kind,
            a=float(data.get("a", 15.0)),
            table=tuple(tuple(row) for row in data.get("points", ())),
            delta_const=float(data.get("delta", 0.0)),
        )


@dataclass(frozen=True)
class SpeedProfile:
    """Desired rear-wheel speed.

    The sinusoid is v = offset + amplitude sin(omega t + phase); the defaults
    give the 0..5 m/s profile starting from rest.
    """

    kind: SpeedKind
    offset: float = 2.5
    amplitude: float = 2.5
    omega: float = 0.5
    phase: float = 1.5 * math.pi
    v0: float = 0.0
    table: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SpeedKind(self.kind))
        if self.kind is SpeedKind.TABLE:
            table = _as_table(self.table, 2, "speed table")
            if len(table) < 2:
                raise DomainError("speed table needs at least 2 rows")
            times = np.asarray([row[0] for row in table])
            if np.any(np.diff(times) <= 0):
                raise DomainError("speed table times must be strictly increasing")
            object.__setattr__(self, "table", table)

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "SpeedProfile":
        return cls(
            kind=SpeedKind(str(data["kind"])),
            offset=float(data.get("offset", 2.5)),
            amplitude=float(data.get("amplitude", 2.5)),
            omega=float(data.get("omega", 0.5)),
            phase=float(data.get("phase", 1.5 * math.pi)),
            v0=float(data.get("v0", 0.0)),
            table=tuple(tuple(row) for row in data.get("points", ())),
        )

    def speed(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is SpeedKind.PAPER_SINUSOID:
            return self.offset + self.amplitude * np.sin(self.omega * t + self.phase)
        if self.kind is SpeedKind.CONSTANT:
            return np.full_like(t, self.v0)
        table = np.asarray(self.table)
        return np.interp(t, table[:, 0], table[:, 1])

    def acceleration(self, t: np.ndarray, dt: float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is SpeedKind.PAPER_SINUSOID:
            return self.amplitude * self.omega * np.cos(self.omega * t + self.phase)
        if self.kind is SpeedKind.CONSTANT:
            return np.zeros_like(t)
        return np.gradient(self.speed(t), dt)

    def distance(self, t: np.ndarray, dt: float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind is SpeedKind.PAPER_SINUSOID:
            drift = self.offset * t
            if self.omega == 0:
                return drift + self.amplitude * math.sin(self.phase) * t
            swing = np.cos(self.omega * t + self.phase) - math.cos(self.phase)
            return drift - (self.amplitude / self.omega) * swing
        if self.kind is SpeedKind.CONSTANT:
            return self.v0 * t
        v = self.speed(t)
        return np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * dt)))


@dataclass(frozen=True)
class SignalTrace:
    """Uniformly sampled planner output starting at t = 0."""

    dt: float
    v: Tuple[float, ...]
    v_dot: Tuple[float, ...]
    delta: Tuple[float, ...]
    delta_dot: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise DomainError(f"signal step must be positive, got {self.dt!r}")
        lengths = {len(self.v), len(self.v_dot), len(self.delta), len(self.delta_dot)}
        if len(lengths) != 1 or len(self.v) < 2:
            raise DomainError("signal columns must share a length of at least 2")
        for name in ("v", "v_dot", "delta", "delta_dot"):
            if not all(math.isfinite(value) for value in getattr(self, name)):
                raise DomainError(f"signal column {name} contains non-finite values")
        if any(abs(value) >= math.pi / 2 for value in self.delta):
            raise DomainError("signal steering must satisfy |delta| < pi/2")

    @classmethod
    def from_arrays(cls, dt: float, v, v_dot, delta, delta_dot) -> "SignalTrace":
        return cls(
            dt=float(dt),
            v=tuple(np.asarray(v, dtype=float).tolist()),
            v_dot=tuple(np.asarray(v_dot, dtype=float).tolist()),
            delta=tuple(np.asarray(delta, dtype=float).tolist()),
            delta_dot=tuple(np.asarray(delta_dot, dtype=float).tolist()),
        )

    def __len__(self) -> int:
        return len(self.v)

    @property
    def horizon(self) -> float:
        return (len(self.v) - 1) * self.dt

    @property
    def max_abs_v_dot(self) -> float:
        return max(abs(value) for value in self.v_dot)

    def sample(self, index: int) -> PlannerSample:
        return PlannerSample(
            t=index * self.dt,
            v=self.v[index],
            v_dot=self.v_dot[index],
            delta=self.delta[index],
            delta_dot=self.delta_dot[index],
        )

    def at(self, t: float) -> PlannerSample:
        """Linear interpolation between samples; held constant past either end."""

        position = t / self.dt
        last = len(self.v) - 1
        nearest = round(position)
        if abs(position - nearest) < 1e-9 or position <= 0 or position >= last:
            index = min(max(int(nearest), 0), last)
            sample = self.sample(index)
            return sample if sample.t == t else PlannerSample(t, sample.v, sample.v_dot, sample.delta, sample.delta_dot)
        lo = int(math.floor(position))
        w = position - lo

        def lerp(column: Tuple[float, ...]) -> float:
            return column[lo] + w * (column[lo + 1] - column[lo])

        return PlannerSample(
            t=t,
            v=lerp(self.v),
            v_dot=lerp(self.v_dot),
            delta=lerp(self.delta),
            delta_dot=lerp(self.delta_dot),
        )


def lemniscate_point(a: float, u: float) -> Tuple[float, float]:
    """Point of (x^2 + y^2)^2 = a^2 (x^2 - y^2) at parameter ``u``; u = 0 is (a, 0)."""

    if not a > 0:
        raise DomainError(f"lemniscate scale must be positive, got {a!r}")
    s, c = math.sin(u), math.cos(u)
    d = 1.0 + s * s
    return a * c / d, a * s * c / d


def _lemniscate_derivatives(a: float, u):
    s, c = np.sin(u), np.cos(u)
    d = 1.0 + s * s
    x1 = -a * s * (3.0 - s * s) / d**2
    y1 = a * (1.0 - 3.0 * s * s) / d**2
    x2 = -a * c * (3.0 - 12.0 * s * s + s**4) / d**3
    y2 = -2.0 * a * s * c * (5.0 - 3.0 * s * s) / d**3
    return x1, y1, x2, y2


def _signed_curvature(x1, y1, x2, y2):
    speed_sq = x1 * x1 + y1 * y1
    if np.any(speed_sq <= _MIN_TANGENT_SQ):
        raise DomainError("degenerate tangent: curvature undefined")
    return (x1 * y2 - y1 * x2) / speed_sq**1.5


def _table_arc_length(points: np.ndarray) -> np.ndarray:
    steps = np.hypot(np.diff(points[:, 0]), np.diff(points[:, 1]))
    if np.any(steps <= 0):
        raise DomainError("waypoint table must be strictly increasing in arc length")
    return np.concatenate(([0.0], np.cumsum(steps)))


def _table_curvature(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    s = _table_arc_length(points)
    x1 = np.gradient(points[:, 0], s, edge_order=2)
    y1 = np.gradient(points[:, 1], s, edge_order=2)
    x2 = np.gradient(x1, s, edge_order=2)
    y2 = np.gradient(y1, s, edge_order=2)
    return s, _signed_curvature(x1, y1, x2, y2)


def path_curvature(spec: PathSpec, u: float, *, wheelbase: float | None = None) -> float:
    """Signed curvature at parameter ``u``.

    ``u`` is the curve parameter for the lemniscate and the arc length for
    waypoint tables.  Constant steering has curvature tan(delta) / w_b, so the
    wheelbase is needed for that kind only.
    """

    if spec.kind is PathKind.LEMNISCATE:
        return float(_signed_curvature(*_lemniscate_derivatives(spec.a, u)))
    if spec.kind is PathKind.WAYPOINT_TABLE:
        s, kappa = _table_curvature(np.asarray(spec.table))
        return float(np.interp(u, s, kappa))
    if wheelbase is None or not wheelbase > 0:
        raise DomainError("constant-steer curvature requires a positive wheelbase")
    return math.tan(spec.delta_const) / wheelbase


def steering_from_curvature(w_b: float, kappa: float) -> float:
    if not math.isfinite(kappa):
        raise DomainError(f"curvature must be finite, got {kappa!r}")
    return math.atan(w_b * kappa)


class _LemniscateArc:
    """Inverts the arc length s(u) = int a / sqrt(1 + sin^2 u) du for increasing s."""

    def __init__(self, a: float) -> None:
        self.a = a
        self._u = 0.0
        self._s = 0.0

    def _speed(self, u: float) -> float:
        return self.a / math.sqrt(1.0 + math.sin(u) ** 2)

    def _length(self, u0: float, u1: float) -> float:
        half = 0.5 * (u1 - u0)
        mid = 0.5 * (u1 + u0)
        return half * sum(w * self._speed(mid + half * x) for x, w in zip(_GL_NODES, _GL_WEIGHTS))

    def parameter_at(self, s: float) -> float:
        if s < self._s:
            raise DomainError("distance along the path must be non-decreasing")
        u = self._u + (s - self._s) / self._speed(self._u)
        for _ in range(30):
            error = self._s + self._length(self._u, u) - s
            u_next = u - error / self._speed(u)
            converged = abs(u_next - u) <= 1e-15 * max(1.0, abs(u))
            u = u_next
            if converged:
                break
        self._u, self._s = u, s
        return u


def _slew_limit(delta: np.ndarray, max_step: float) -> np.ndarray:
    limited = np.empty_like(delta)
    limited[0] = delta[0]
    for i in range(1, len(delta)):
        change = min(max(delta[i] - limited[i - 1], -max_step), max_step)
        limited[i] = limited[i - 1] + change
    return limited


def _steering_along(spec: PathSpec, distance: np.ndarray, wheelbase: float | None) -> np.ndarray:
    if spec.kind is PathKind.CONSTANT_STEER:
        return np.full_like(distance, spec.delta_const)
    if wheelbase is None or not wheelbase > 0:
        raise DomainError("path following requires a positive wheelbase")
    if spec.kind is PathKind.LEMNISCATE:
        arc = _LemniscateArc(spec.a)
        u = np.array([arc.parameter_at(float(s)) for s in distance])
        kappa = _signed_curvature(*_lemniscate_derivatives(spec.a, u))
    else:
        s_tab, k_tab = _table_curvature(np.asarray(spec.table))
        if distance[-1] > s_tab[-1]:
            logger.warning(
                "distance travelled %.3f m exceeds waypoint table length %.3f m; holding final curvature",
                distance[-1],
                s_tab[-1],
            )
        kappa = np.interp(distance, s_tab, k_tab)
    return np.arctan(wheelbase * kappa)


def build_signal_trace(
    spec: PathSpec,
    prof: SpeedProfile,
    horizon: float,
    dt_signal: float,
    *,
    wheelbase: float | None = None,
    rate_limit: float | None = None,
) -> SignalTrace:
    """Sample the planner output on a uniform grid covering ``[0, horizon]``.

    Rates are central differences of the sampled signals (one-sided at the
    ends) except for the sinusoidal speed, whose derivative is analytic.
    ``rate_limit`` (rad/s) slews delta before differentiation.
    """

    if not dt_signal > 0:
        raise DomainError(f"signal step must be positive, got {dt_signal!r}")
    steps = int(round(horizon / dt_signal))
    if steps < 1:
        raise DomainError("horizon must cover at least one signal step")
    t = np.arange(steps + 1) * dt_signal
    v = prof.speed(t)
    if np.any(v < 0):
        raise DomainError("speed profile must be non-negative over the horizon")
    v_dot = prof.acceleration(t, dt_signal)
    delta = _steering_along(spec, prof.distance(t, dt_signal), wheelbase)
    if rate_limit is not None:
        delta = _slew_limit(delta, rate_limit * dt_signal)
    delta_dot = np.gradient(delta, dt_signal)
    trace = SignalTrace.from_arrays(dt_signal, v, v_dot, delta, delta_dot)
    logger.info(
        "signal trace: %d samples, max |v_dot| = %.6g m/s^2, max |delta| = %.6g rad",
        len(trace),
        trace.max_abs_v_dot,
        float(np.max(np.abs(delta))),
    )
    return trace


def trace_from_signal_table(
    rows: Sequence[Sequence[float]],
    dt_signal: float,
    horizon: float | None = None,
) -> SignalTrace:
    """Resample a user ``(t, v, delta)`` table onto a uniform grid and differentiate."""

    table = np.asarray(_as_table(rows, 3, "signal table"))
    if len(table) < 2 or np.any(np.diff(table[:, 0]) <= 0):
        raise DomainError("signal table needs at least 2 rows with increasing time")
    if np.any(table[:, 1] < 0):
        raise DomainError("signal table speeds must be non-negative")
    end = table[-1, 0] if horizon is None else horizon
    steps = int(round(end / dt_signal))
    if steps < 1:
        raise DomainError("horizon must cover at least one signal step")
    t = np.arange(steps + 1) * dt_signal
    v = np.interp(t, table[:, 0], table[:, 1])
    delta = np.interp(t, table[:, 0], table[:, 2])
    return SignalTrace.from_arrays(dt_signal, v, np.gradient(v, dt_signal), delta, np.gradient(delta, dt_signal))
