"""Command-line interface: simulate and compare scenarios, run sweeps and the acceptance suite."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Callable, Sequence, Tuple

from .data_loader import ConfigError, ScenarioDocument, bundled_scenarios
from .entities import DomainError
from .sim.engine import run
from .sim.export import Emit, parse_emit, save_run, write_comparison_plot, write_inputs_plot
from .sim.monitor import summarize
from .sim.sweep import load_grid, run_sweep, write_sweep_csv
from .verify import run_checks

logger = logging.getLogger(__name__)


class ExitCode(IntEnum):
    OK = 0
    VERIFY_FAILED = 1
    CONFIG_ERROR = 2
    CAPSIZED = 3


@dataclass(frozen=True)
class RunConfig:
    """What to simulate and where the results go."""

    scenario: str
    out_dir: Path = Path("out")
    emit: Tuple[Emit, ...] = tuple(Emit)
    overrides: Tuple[str, ...] = ()


def _stderr(message: str) -> None:
    print(message, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="escooter-balance",
        description="Simulasi keseimbangan roll e-scooter dengan kontroler PD dan PD terlinearisasi umpan balik",
    )
    parser.add_argument("--verbose", action="store_true", help="Tampilkan log INFO")
    parser.add_argument("--debug", action="store_true", help="Tampilkan log DEBUG")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Jalankan satu skenario dan tulis hasilnya")
    simulate.add_argument(
        "--scenario",
        required=True,
        help=f"Berkas skenario JSON atau nama bawaan ({', '.join(bundled_scenarios())})",
    )
    simulate.add_argument("--out", default="out", help="Direktori keluaran (default: out)")
    simulate.add_argument("--emit", default="csv,svg,summary", help="Berkas yang ditulis: csv,svg,summary")
    simulate.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                          help="Ubah nilai skenario, contoh: gains.kd=40 atau initial.theta=5deg")

    verify = commands.add_parser("verify", help="Jalankan rangkaian pemeriksaan penerimaan")
    verify.add_argument("--filter", help="Hanya pemeriksaan yang namanya memuat teks ini")
    verify.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Ubah nilai skenario dasar setiap pemeriksaan")

    sweep = commands.add_parser("sweep", help="Jalankan grid skenario dan tulis tabel CSV")
    sweep.add_argument("--scenario", required=True, help="Berkas skenario JSON atau nama bawaan")
    sweep.add_argument("--grid", required=True, help="Berkas JSON: kunci -> daftar nilai")
    sweep.add_argument("--out", default="out", help="Direktori keluaran (default: out)")
    sweep.add_argument("--workers", type=int, default=1, help="Jumlah proses paralel")
    sweep.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="Ubah nilai skenario dasar")

    compare = commands.add_parser("compare", help="Jalankan beberapa skenario dan gambar perbandingannya")
    compare.add_argument(
        "--scenario",
        dest="scenarios",
        action="append",
        default=[],
        help="Skenario yang dibandingkan (boleh diulang; default: keempat skenario bawaan)",
    )
    compare.add_argument("--out", default="out", help="Direktori keluaran (default: out)")
    compare.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                         help="Ubah nilai setiap skenario")
    return parser


def cmd_simulate(cfg: RunConfig, output: Callable[[str], None] = print) -> int:
    try:
        scenario = ScenarioDocument.load(cfg.scenario).with_overrides(cfg.overrides).build()
    except (ConfigError, DomainError) as exc:
        _stderr(f"Kesalahan konfigurasi: {exc}")
        return ExitCode.CONFIG_ERROR

    trajectory = run(scenario)
    summary = summarize(trajectory)
    try:
        written = save_run(trajectory, cfg.out_dir, cfg.emit, summary)
    except OSError as exc:
        _stderr(f"Gagal menulis hasil: {exc}")
        return ExitCode.CONFIG_ERROR

    output(f"Skenario {summary.scenario} ({summary.controller}): {summary.samples} sampel")
    output(f"U_max = {summary.u_max:.6g} N m")
    output(f"Batas |theta| = {summary.theta_band:.6g} rad, masuk={summary.theta.entered}, tertahan={summary.theta.contained}")
    output(
        f"Batas |theta_dot| = {summary.theta_dot_band:.6g} rad/s, "
        f"masuk={summary.theta_dot.entered}, tertahan={summary.theta_dot.contained}"
    )
    output(f"sup|theta| = {summary.sup_theta:.6g} rad")
    for kind, path in written.items():
        output(f"Berkas {kind.value}: {path}")
    if summary.capsized:
        output(f"Scooter terjatuh pada t = {summary.capsize_time:.6g} s")
        return ExitCode.CAPSIZED
    return ExitCode.OK


def cmd_verify(
    name_filter: str | None = None,
    overrides: Sequence[str] = (),
    output: Callable[[str], None] = print,
) -> int:
    results = run_checks(name_filter, overrides)
    if not results:
        _stderr(f"Tidak ada pemeriksaan yang cocok dengan '{name_filter}'")
        return ExitCode.CONFIG_ERROR
    for result in results:
        output(f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
    failed = sum(not result.passed for result in results)
    output(f"{len(results) - failed}/{len(results)} pemeriksaan lulus")
    return ExitCode.VERIFY_FAILED if failed else ExitCode.OK


def cmd_sweep(cfg: RunConfig, grid_path: str | Path, *, workers: int = 1, output: Callable[[str], None] = print) -> int:
    try:
        document = ScenarioDocument.load(cfg.scenario).with_overrides(cfg.overrides)
        grid = load_grid(grid_path)
        rows = run_sweep(document, grid, workers=max(1, workers))
        destination = write_sweep_csv(rows, list(grid), cfg.out_dir / "sweep.csv")
    except (ConfigError, DomainError) as exc:
        _stderr(f"Kesalahan konfigurasi: {exc}")
        return ExitCode.CONFIG_ERROR
    except OSError as exc:
        _stderr(f"Gagal menulis hasil: {exc}")
        return ExitCode.CONFIG_ERROR
    capsized = sum(row.status == "capsized" for row in rows)
    errors = sum(row.status == "error" for row in rows)
    output(f"{len(rows)} sel selesai ({capsized} terjatuh, {errors} galat): {destination}")
    return ExitCode.OK


def cmd_compare(
    scenarios: Sequence[str],
    out_dir: str | Path,
    overrides: Sequence[str] = (),
    output: Callable[[str], None] = print,
) -> int:
    names = list(scenarios) or bundled_scenarios()
    try:
        built = [ScenarioDocument.load(name).with_overrides(overrides).build() for name in names]
    except (ConfigError, DomainError) as exc:
        _stderr(f"Kesalahan konfigurasi: {exc}")
        return ExitCode.CONFIG_ERROR

    trajectories = [run(scenario) for scenario in built]
    directory = Path(out_dir)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        comparison = write_comparison_plot(trajectories, directory / "comparison.svg")
        inputs = write_inputs_plot(trajectories[0], directory / "inputs.svg")
    except OSError as exc:
        _stderr(f"Gagal menulis hasil: {exc}")
        return ExitCode.CONFIG_ERROR

    for traj in trajectories:
        summary = summarize(traj)
        status = f"terjatuh pada t = {summary.capsize_time:.6g} s" if summary.capsized else "seimbang"
        after = summary.sup_theta_after_entry
        after_text = "tidak pernah masuk" if after is None else f"{after:.6g} rad"
        output(
            f"{summary.scenario} ({summary.controller}): batas |theta| = {summary.theta_band:.6g} rad, "
            f"sup|theta| setelah masuk = {after_text}, {status}"
        )
    output(f"Berkas perbandingan: {comparison}")
    output(f"Berkas masukan: {inputs}")
    return ExitCode.CAPSIZED if any(traj.capsized for traj in trajectories) else ExitCode.OK


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)

    if args.command == "compare":
        return int(cmd_compare(args.scenarios, args.out, args.overrides))
    if args.command == "verify":
        return int(cmd_verify(args.filter, args.overrides))

    try:
        emit = tuple(parse_emit(args.emit)) if args.command == "simulate" else tuple(Emit)
    except ValueError as exc:
        _stderr(f"Kesalahan konfigurasi: {exc}")
        return int(ExitCode.CONFIG_ERROR)
    cfg = RunConfig(scenario=args.scenario, out_dir=Path(args.out), emit=emit, overrides=tuple(args.overrides))
    if args.command == "simulate":
        return int(cmd_simulate(cfg))
    return int(cmd_sweep(cfg, args.grid, workers=args.workers))


if __name__ == "__main__":  # pragma: no cover - CLI entry point
    sys.exit(main())
