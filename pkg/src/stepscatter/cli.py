"""Command line interface.

Subcommands
-----------
analytic   stationary R/T over a set of energy ratios (no propagation)
run        one full packet run against the configured step
sweep      one run per energy ratio at fixed packet
converge   one run per packet width at fixed energy ratio
emit       convert an existing CSV table to another format

Report commands write their delimited output plus a rendered PNG into the
output directory (``--out``, or the STEPSCATTER_OUT environment variable,
or ``./results``).  When both a config file and an overlapping flag are
given, the config file wins and a notice is logged.

Exit codes: 0 success, 2 configuration problem, 3 physics/convergence
failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import RunConfig, default_config, default_study_config, load_config
from .errors import ConfigError, PhysicsError
from .evolve import PropagatorConfig
from .harness import (
    EnergyRatio,
    PacketWidth,
    SweepSpec,
    Table,
    analytic_table,
    convergence_study,
    emit,
    read_table,
    run_detailed,
    result_table,
    sweep,
)
from .plots import render_table, render_trajectory

log = logging.getLogger("stepscatter")

_EXIT_CONFIG = 2
_EXIT_PHYSICS = 3
_EXIT_IO = 4

_SCHEMES = {"cn": "crank_nicolson", "split": "split_step"}
_SNAPSHOT_EVERY = 50


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("need at least one value")
    return values


def _add_common(p: argparse.ArgumentParser, *, jobs: bool = True) -> None:
    p.add_argument("--config", type=Path, default=None, help="run config file (INI)")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument(
        "--format",
        choices=("csv", "json", "plot"),
        default="csv",
        help="delimited output format; 'plot' emits a CSV plus a matplotlib script",
    )
    p.add_argument(
        "--scheme",
        choices=sorted(_SCHEMES),
        default=None,
        help="propagation scheme (ignored with a notice when --config is given)",
    )
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="parallel row workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepscatter",
        description="1-D step scattering: analytic probabilities vs propagated packets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="stationary R/T table, no propagation")
    _add_common(p, jobs=False)
    p.add_argument(
        "--values",
        type=_float_list,
        default=(0.25, 0.5, 1.0, 1.042, 1.5, 2.0, 4.0, 8.0, 16.0),
        help="comma-separated E/V0 ratios",
    )

    p = sub.add_parser("run", help="single packet run")
    _add_common(p, jobs=False)

    p = sub.add_parser("sweep", help="packet runs over E/V0 ratios")
    _add_common(p)
    p.add_argument(
        "--values",
        type=_float_list,
        default=(0.25, 0.5, 1.5, 2.0, 4.0, 8.0),
        help="comma-separated E/V0 ratios (E/V0 = 1 stalls: nothing transmits "
        "ballistically, so separation never fires)",
    )

    p = sub.add_parser("converge", help="packet runs over widths at fixed E/V0")
    _add_common(p)
    p.add_argument(
        "--values",
        type=_float_list,
        default=(25.0, 50.0, 100.0, 200.0),
        help="comma-separated packet widths in carrier wavelengths",
    )

    p = sub.add_parser("emit", help="convert an existing CSV table")
    p.add_argument("table", type=Path, help="input CSV previously written by this tool")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--format", choices=("csv", "json", "plot"), default="json")

    return parser


def _out_dir(args) -> Path:
    out = args.out or Path(os.environ.get("STEPSCATTER_OUT", "results"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _base_config(args, fallback) -> RunConfig:
    if args.config is not None:
        config = load_config(args.config)
        if args.scheme is not None:
            log.info(
                "notice: --scheme %s ignored, config file wins (scheme %s)",
                args.scheme,
                config.propagator.scheme,
            )
        return config
    config = fallback()
    if args.scheme is not None:
        scheme = _SCHEMES[args.scheme]
        config = replace(
            config,
            propagator=PropagatorConfig(scheme=scheme, dt=config.propagator.dt),
        )
    return config


def _write_report(table: Table, fmt: str, out: Path, stem: str) -> list[Path]:
    if fmt == "csv":
        files = emit(table, "csv", out / f"{stem}.csv")
    elif fmt == "json":
        files = emit(table, "json", out / f"{stem}.json")
    else:
        files = emit(table, "plot", out / f"{stem}.py")
    files.append(render_table(table, out / f"{stem}.png"))
    for f in files:
        log.info("wrote %s", f)
    return files


def _cmd_analytic(args) -> int:
    out = _out_dir(args)
    base = _base_config(args, default_study_config)
    table = analytic_table(base, args.values)
    _write_report(table, args.format, out, "analytic")
    return 0


def _cmd_run(args) -> int:
    out = _out_dir(args)
    config = _base_config(args, default_config)
    log.info(
        "propagating %s packet (width %.1f wavelengths) with %s, dt=%g",
        type(config.packet.shape).__name__,
        config.packet.width / config.packet.carrier_wavelength,
        config.propagator.scheme,
        config.propagator.dt,
    )
    result, traj = run_detailed(config, snapshot_every=_SNAPSHOT_EVERY)
    table = result_table(config, result)
    _write_report(table, args.format, out, "run")
    png = render_trajectory(traj, out / "run_trajectory.png")
    log.info("wrote %s", png)
    log.info(
        "p_left=%.6g p_right=%.6g (analytic R=%.6g T=%.6g)",
        result.p_left,
        result.p_right,
        result.analytic.reflection,
        result.analytic.transmission,
    )
    return 0


def _cmd_sweep(args) -> int:
    out = _out_dir(args)
    base = _base_config(args, default_study_config)
    spec = SweepSpec(base, EnergyRatio(args.values))
    try:
        table = sweep(spec, jobs=args.jobs)
    except PhysicsError as exc:
        _persist_partial(exc, args.format, out, "sweep")
        raise
    _write_report(table, args.format, out, "sweep")
    return 0


def _cmd_converge(args) -> int:
    out = _out_dir(args)
    base = _base_config(args, default_study_config)
    spec = SweepSpec(base, PacketWidth(args.values))
    try:
        table = convergence_study(spec, jobs=args.jobs)
    except PhysicsError as exc:
        _persist_partial(exc, args.format, out, "converge")
        raise
    _write_report(table, args.format, out, "converge")
    return 0


def _persist_partial(exc: PhysicsError, fmt: str, out: Path, stem: str) -> None:
    partial = getattr(exc, "partial_table", None)
    if partial is not None and partial.rows:
        files = _write_report(partial, fmt, out, f"{stem}_partial")
        log.error("run failed; partial table persisted: %s", files[0])


def _cmd_emit(args) -> int:
    out = args.out or args.table.parent
    out.mkdir(parents=True, exist_ok=True)
    table = read_table(args.table)
    suffix = {"csv": ".csv", "json": ".json", "plot": ".py"}[args.format]
    target = out / (args.table.stem + suffix)
    if args.format == "csv" and target.resolve() == args.table.resolve():
        raise ConfigError("emit csv would overwrite its own input; pick another --out")
    files = emit(table, args.format, target)
    for f in files:
        log.info("wrote %s", f)
    return 0


_COMMANDS = {
    "analytic": _cmd_analytic,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "converge": _cmd_converge,
    "emit": _cmd_emit,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return _EXIT_CONFIG
    except PhysicsError as exc:
        log.error("physics failure: %s", exc)
        return _EXIT_PHYSICS
    except OSError as exc:
        log.error("i/o failure: %s", exc)
        return _EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
