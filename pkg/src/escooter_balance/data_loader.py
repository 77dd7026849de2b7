"""Scenario documents: bundled JSON resources, user files and overrides."""
from __future__ import annotations

import copy
import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

from .dynamics import CouplingSign
from .entities import DomainError, Gains, ScooterParams, UncertaintyConfig
from .planner import PathKind, PathSpec, SignalTrace, SpeedKind, SpeedProfile, build_signal_trace, trace_from_signal_table
from .sim.engine import ControllerKind, Scenario

logger = logging.getLogger(__name__)

_DATA_DIR = Path(__file__).resolve().parent / "data"
SCHEMA_VERSION = 1

_SECTION_KEYS: Dict[str, Tuple[str, ...] | None] = {
    "schema": None,
    "name": None,
    "params": ("m", "h", "r", "w_b", "I_theta", "I_psi", "g"),
    "gains": ("kp", "kd"),
    "controller": None,
    "uncertainty": ("v_scale", "delta_scale", "m_est", "h_est", "r_est"),
    "path": ("kind", "a", "points", "file", "delta"),
    "speed": ("kind", "offset", "amplitude", "omega", "phase", "v0", "points", "file"),
    "signal": ("file", "dt", "rate_limit"),
    "initial": ("theta", "theta_dot"),
    "dt": None,
    "horizon": None,
    "coupling_sign": None,
    "hold_period": None,
    "capsize_angle": None,
}


class ConfigError(ValueError):
    """Raised when a scenario document or table cannot be used."""


def parse_angle(value: Any) -> float:
    """Radians from a bare number or a string with a ``deg``/``rad`` suffix."""

    if isinstance(value, bool):
        raise ConfigError(f"angle expected, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        try:
            if text.endswith("deg"):
                return math.radians(float(text[:-3]))
            if text.endswith("rad"):
                return float(text[:-3])
        except ValueError as exc:
            raise ConfigError(f"malformed angle {value!r}") from exc
        raise ConfigError(f"angle {value!r} needs an explicit 'deg' or 'rad' suffix")
    raise ConfigError(f"angle expected, got {value!r}")


def _optional_angle(value: Any) -> float | None:
    return None if value is None else parse_angle(value)


def parse_override(text: str) -> Tuple[str, Any]:
    """Split ``key=value``; the value is JSON when it parses, else a string."""

    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw.strip()
    return key, value


def apply_overrides(document: Mapping[str, Any], overrides: Iterable[str | Tuple[str, Any]]) -> Dict[str, Any]:
    """Return a copy of ``document`` with dotted-path overrides applied."""

    result = copy.deepcopy(dict(document))
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        parts = key.split(".")
        section = parts[0]
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown scenario key {key!r}")
        allowed = _SECTION_KEYS[section]
        if len(parts) == 1:
            result[section] = value
            continue
        if allowed is None or len(parts) != 2 or parts[1] not in allowed:
            raise ConfigError(f"unknown scenario key {key!r}")
        target = result.get(section)
        if target is None:
            target = {}
        elif not isinstance(target, dict):
            raise ConfigError(f"cannot set {key!r}: {section!r} is not a section")
        target = dict(target)
        target[parts[1]] = value
        result[section] = target
    return result


def read_csv_table(path: str | Path, columns: Sequence[str]) -> List[Tuple[float, ...]]:
    """Read the named numeric columns of a headed CSV file."""

    source = Path(path)
    try:
        with source.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            missing = [name for name in columns if name not in (reader.fieldnames or ())]
            if missing:
                raise ConfigError(f"{source}: missing columns {', '.join(missing)}")
            return [tuple(float(row[name]) for name in columns) for row in reader]
    except FileNotFoundError as exc:
        raise ConfigError(f"table not found: {source}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: malformed table ({exc})") from exc


def bundled_scenarios() -> List[str]:
    return sorted(path.stem for path in _DATA_DIR.glob("*.json"))


def _resolve(ref: str | Path) -> Path:
    path = Path(ref)
    if path.is_file():
        return path
    name = path.name if path.suffix == ".json" else f"{path.name}.json"
    bundled = _DATA_DIR / name
    if path.parent == Path(".") and bundled.is_file():
        return bundled
    raise ConfigError(f"scenario not found: {ref}")


@dataclass(frozen=True)
class ScenarioDocument:
    """A parsed scenario file and the directory its relative tables live in."""

    data: Dict[str, Any]
    base_dir: Path

    @classmethod
    def load(cls, ref: str | Path) -> "ScenarioDocument":
        """Load a file path or a bundled scenario name."""

        path = _resolve(ref)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: scenario must be a JSON object")
        return cls.from_dict(data, base_dir=path.parent)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: str | Path = ".") -> "ScenarioDocument":
        schema = data.get("schema")
        if schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported scenario schema {schema!r}, expected {SCHEMA_VERSION}")
        unknown = sorted(set(data) - set(_SECTION_KEYS))
        if unknown:
            raise ConfigError(f"unknown scenario keys: {', '.join(unknown)}")
        return cls(data=copy.deepcopy(dict(data)), base_dir=Path(base_dir))

    @property
    def name(self) -> str:
        return str(self.data.get("name", "scenario"))

    def with_overrides(self, overrides: Iterable[str | Tuple[str, Any]]) -> "ScenarioDocument":
        return ScenarioDocument.from_dict(apply_overrides(self.data, overrides), self.base_dir)

    def _table(self, section: Mapping[str, Any], columns: Sequence[str]) -> List[Tuple[float, ...]]:
        if "file" in section:
            return read_csv_table(self.base_dir / str(section["file"]), columns)
        return [tuple(row) for row in section.get("points", ())]

    def _trace(self, params: ScooterParams, dt: float, horizon: float) -> SignalTrace:
        signal = dict(self.data.get("signal") or {})
        dt_signal = float(signal.get("dt", dt))
        if "file" in signal:
            rows = self._table(signal, ("t", "v", "delta"))
            return trace_from_signal_table(rows, dt_signal, horizon)

        path = dict(self.data.get("path") or {"kind": PathKind.LEMNISCATE.value})
        if PathKind(path["kind"]) is PathKind.WAYPOINT_TABLE:
            path["points"] = self._table(path, ("x", "y"))
        if "delta" in path:
            path["delta"] = parse_angle(path["delta"])
        speed = dict(self.data.get("speed") or {"kind": SpeedKind.PAPER_SINUSOID.value})
        if SpeedKind(speed["kind"]) is SpeedKind.TABLE:
            speed["points"] = self._table(speed, ("t", "v"))
        rate_limit = signal.get("rate_limit")
        return build_signal_trace(
            PathSpec.from_dict(path),
            SpeedProfile.from_dict(speed),
            horizon,
            dt_signal,
            wheelbase=params.w_b,
            rate_limit=None if rate_limit is None else float(rate_limit),
        )

    def build(self) -> Scenario:
        """Turn the document into a validated ``Scenario``.

        Domain violations surface as ``DomainError``; structural problems
        (missing sections, wrong types, bad enum names) as ``ConfigError``.
        """

        data = self.data
        try:
            params = ScooterParams.from_dict(data["params"])
            dt = float(data.get("dt", 1e-3))
            horizon = float(data.get("horizon", 20.0))
            initial = data.get("initial") or {}
            theta_dot0 = float(initial.get("theta_dot", 0.0))
            if "theta_dot" not in initial:
                logger.info("%s: initial roll rate not given, assuming 0 rad/s", self.name)
            hold = data.get("hold_period")
            return Scenario(
                params_actual=params,
                uncertainty=UncertaintyConfig.from_dict(data.get("uncertainty")),
                gains=Gains.from_dict(data["gains"]),
                controller=ControllerKind(data.get("controller", ControllerKind.PD.value)),
                trace=self._trace(params, dt, horizon),
                theta0_init=parse_angle(initial.get("theta", "10deg")),
                theta_dot0_init=theta_dot0,
                dt=dt,
                horizon=horizon,
                name=self.name,
                coupling_sign=CouplingSign(data.get("coupling_sign", CouplingSign.PAPER.value)),
                hold_period=None if hold is None else float(hold),
                capsize_angle=_optional_angle(data.get("capsize_angle", math.pi / 2)),
            )
        except (DomainError, ConfigError):
            raise
        except KeyError as exc:
            raise ConfigError(f"{self.name}: missing key {exc.args[0]!r}") from exc
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"{self.name}: {exc}") from exc


def load_scenario(ref: str | Path, overrides: Iterable[str | Tuple[str, Any]] = ()) -> Scenario:
    return ScenarioDocument.load(ref).with_overrides(overrides).build()
