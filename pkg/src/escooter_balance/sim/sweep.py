"""Grid sweeps over scenario overrides, optionally across worker processes."""
from __future__ import annotations

import csv
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple

from ..data_loader import ConfigError, ScenarioDocument
from ..entities import DomainError
from .engine import run
from .export import format_float
from .monitor import summarize

logger = logging.getLogger(__name__)

#: One grid cell: ordered (override key, value) pairs.
Cell = Tuple[Tuple[str, Any], ...]


def expand_grid(grid: Mapping[str, Sequence[Any]]) -> List[Cell]:
    """Cartesian product of the grid values in key order, last key fastest."""

    if not grid:
        raise DomainError("sweep grid must name at least one key")
    keys = list(grid)
    for key in keys:
        if isinstance(grid[key], (str, bytes)) or len(grid[key]) == 0:
            raise DomainError(f"grid entry {key!r} must be a non-empty list")
    return [tuple(zip(keys, values)) for values in itertools.product(*(grid[key] for key in keys))]


def load_grid(path: str | Path) -> Dict[str, List[Any]]:
    try:
        grid = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"grid file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(grid, dict) or not all(isinstance(values, list) for values in grid.values()):
        raise ConfigError(f"{path}: grid must map keys to lists of values")
    return grid


@dataclass(frozen=True)
class SweepRow:
    cell: int
    values: Tuple[Any, ...]
    status: str
    u_max: float | None = None
    theta_bound: float | None = None
    theta_dot_bound: float | None = None
    sup_theta: float | None = None
    theta_entered: bool | None = None
    theta_contained: bool | None = None
    theta_dot_entered: bool | None = None
    theta_dot_contained: bool | None = None
    error: str | None = None


def _run_cell(job: Tuple[int, ScenarioDocument, Cell]) -> SweepRow:
    index, document, cell = job
    values = tuple(value for _, value in cell)
    try:
        scenario = document.with_overrides(cell).build()
        summary = summarize(run(scenario))
    except (ConfigError, DomainError) as exc:
        logger.warning("cell %d failed: %s", index, exc)
        return SweepRow(cell=index, values=values, status="error", error=str(exc))
    logger.info("cell %d done (capsized=%s)", index, summary.capsized)
    return SweepRow(
        cell=index,
        values=values,
        status="capsized" if summary.capsized else "ok",
        u_max=summary.u_max,
        theta_bound=summary.theta_band,
        theta_dot_bound=summary.theta_dot_band,
        sup_theta=summary.sup_theta,
        theta_entered=summary.theta.entered,
        theta_contained=summary.theta.contained,
        theta_dot_entered=summary.theta_dot.entered,
        theta_dot_contained=summary.theta_dot.contained,
    )


def run_sweep(document: ScenarioDocument, grid: Mapping[str, Sequence[Any]], *, workers: int = 1) -> List[SweepRow]:
    """Run every grid cell as a set of overrides on ``document``.

    Rows come back ordered by cell index whatever the worker count.
    """

    cells = expand_grid(grid)
    jobs = [(index, document, cell) for index, cell in enumerate(cells)]
    logger.info("sweeping %d cells with %d worker(s)", len(jobs), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, jobs))
    return [_run_cell(job) for job in jobs]


def _cell_text(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (int, str)):
        return str(value)
    return json.dumps(value, sort_keys=True)


def write_sweep_csv(rows: Sequence[SweepRow], keys: Sequence[str], path: str | Path) -> Path:
    header = [
        "cell",
        *keys,
        "status",
        "u_max",
        "theta_bound",
        "theta_dot_bound",
        "sup_theta",
        "theta_entered",
        "theta_contained",
        "theta_dot_entered",
        "theta_dot_contained",
        "error",
    ]
    destination = Path(path)
    destination.parent.mkdir(parents=True, exist_ok=True)
    with destination.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    row.cell,
                    *(_cell_text(value) for value in row.values),
                    row.status,
                    *(
                        _cell_text(getattr(row, name))
                        for name in header[len(keys) + 2 :]
                    ),
                ]
            )
    return destination
