"""Run orchestration: single scattering runs, parameter sweeps, convergence
studies, and emission of result tables with the analytic oracle columns.

Every table row pairs packet-measured probabilities with the stationary
prediction for the same energy and potential, so emitted files always carry
both sides of the comparison.  Sweeps hold the incident packet fixed and
vary the step height (the energy ratio axis); convergence studies rebuild
the geometry per packet width from a self-calibrating recipe that keeps the
envelope's fast spectral tail away from the grid edges.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .config import RunConfig
from .errors import ConfigError, NoCollisionError, PhysicsError
from .evolve import Trajectory, interaction_window, propagate
from .measure import (
    REGION_PROBABILITY_FLOOR,
    ScatteringResult,
    group_velocity_fit,
    packet_width,
)
from .packet import GridSpec, PacketSpec, build_packet, momentum_spectrum
from .stationary import (
    PiecewiseConstantPotential,
    ProbabilityPair,
    scattering_probabilities,
    step_amplitudes,
    transfer_matrix_amplitudes,
    wavenumbers,
)

__all__ = [
    "CSV_HEADERS",
    "Table",
    "EnergyRatio",
    "PacketWidth",
    "SweepSpec",
    "analytic_probabilities",
    "analytic_table",
    "run",
    "run_detailed",
    "result_table",
    "sweep",
    "convergence_row_config",
    "convergence_study",
    "emit",
    "read_table",
]

CSV_HEADERS = (
    "e_over_v0",
    "w_over_lambda",
    "r_analytic",
    "t_analytic",
    "p_left",
    "p_right",
    "w_t_ratio",
    "v_left",
    "v_right",
    "window_measured",
    "window_analytic",
)

# Contact thresholds for carving the incident fit window out of a trajectory.
_CONTACT_PROBABILITY = 1e-4
_TAIL_FIT_RECORDS = 12


@dataclass(frozen=True, slots=True)
class Table:
    """Column-named result rows plus one config fingerprint per row."""

    headers: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]
    fingerprints: tuple[str, ...] = ()

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.headers):
                raise ValueError(
                    f"row of length {len(row)} does not match {len(self.headers)} headers"
                )
        if self.fingerprints and len(self.fingerprints) != len(self.rows):
            raise ValueError("need one fingerprint per row")

    def column(self, name: str) -> np.ndarray:
        i = self.headers.index(name)
        return np.array([row[i] for row in self.rows])


@dataclass(frozen=True, slots=True)
class EnergyRatio:
    """Sweep axis: values of E/V0 at fixed incident packet."""

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ConfigError("axis needs at least one value")
        if any(not (v > 0.0 and math.isfinite(v)) for v in self.values):
            raise ConfigError(f"axis values must be positive and finite, got {self.values}")


@dataclass(frozen=True, slots=True)
class PacketWidth:
    """Sweep axis: values of packet width over carrier wavelength."""

    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ConfigError("axis needs at least one value")
        if any(not (v > 0.0 and math.isfinite(v)) for v in self.values):
            raise ConfigError(f"axis values must be positive and finite, got {self.values}")


@dataclass(frozen=True, slots=True)
class SweepSpec:
    """A base run plus the axis along which to vary it."""

    base: RunConfig
    axis: EnergyRatio | PacketWidth
    outputs: tuple[str, ...] = CSV_HEADERS

    def __post_init__(self):
        unknown = set(self.outputs) - set(CSV_HEADERS)
        if unknown:
            raise ConfigError(f"unknown output columns {sorted(unknown)}")


def analytic_probabilities(config: RunConfig) -> ProbabilityPair:
    """Stationary reflection/transmission at the packet's carrier energy."""
    units = config.units
    k0 = config.packet.k0
    energy = (units.hbar * k0) ** 2 / (2.0 * units.mass)
    pot = config.potential
    levels = pot.levels
    if len(levels) == 2:
        # Plain step: closed form, valid in the evanescent regime too.
        k, kappa = wavenumbers(energy - levels[0], levels[1] - levels[0], units)
        return scattering_probabilities(step_amplitudes(k, kappa, units))
    amps = transfer_matrix_amplitudes(pot, energy, units)
    return scattering_probabilities(amps)


def _split_position(config: RunConfig) -> float:
    b = config.potential.boundaries
    return 0.5 * (b[0] + b[-1])


def _fit_or_nan(traj: Trajectory, region, window) -> float:
    try:
        return group_velocity_fit(traj, region, window)
    except ValueError:
        return math.nan


def _measure_run(
    config: RunConfig, state0, final, traj: Trajectory
) -> ScatteringResult:
    units = config.units
    pk = config.packet
    split = traj.split
    analytic = analytic_probabilities(config)

    p_left = float(traj.left_probability[-1])
    p_right = float(traj.right_probability[-1])

    try:
        width_incident = packet_width(state0, "left", split)
    except ValueError:
        width_incident = math.nan
    width_reflected = (
        packet_width(final, "left", split) if p_left > REGION_PROBABILITY_FLOOR else math.nan
    )
    width_transmitted = (
        packet_width(final, "right", split) if p_right > REGION_PROBABILITY_FLOOR else math.nan
    )

    # Incident fit window: records strictly before the packet first touches
    # the far side, with a two-record safety margin.
    t = traj.times
    crossed = np.nonzero(traj.right_probability > traj.right_probability[0] + _CONTACT_PROBABILITY)[0]
    i_contact = int(crossed[0]) if crossed.size else len(t)
    i_end = i_contact - 2
    v_incident = (
        _fit_or_nan(traj, "left", (float(t[0]), float(t[i_end]))) if i_end >= 4 else math.nan
    )

    # Transmitted fit window: the trailing records, where the stop criterion
    # has already certified stationary region probabilities.
    n_tail = min(_TAIL_FIT_RECORDS, len(t))
    tail_window = (float(t[-n_tail]), float(t[-1]))
    v_transmitted = (
        _fit_or_nan(traj, "right", tail_window)
        if p_right > REGION_PROBABILITY_FLOOR
        else math.nan
    )

    try:
        timing = interaction_window(traj, pk.width, pk.k0, units)
    except NoCollisionError:
        timing = None

    return ScatteringResult(
        p_left=p_left,
        p_right=p_right,
        width_incident=width_incident,
        width_reflected=width_reflected,
        width_transmitted=width_transmitted,
        v_incident=v_incident,
        v_transmitted=v_transmitted,
        timing=timing,
        analytic=analytic,
        config_fingerprint=config.fingerprint,
    )


def run_detailed(
    config: RunConfig, *, snapshot_every: int | None = None
) -> tuple[ScatteringResult, Trajectory]:
    """Single scattering run returning the result and the full trajectory."""
    state0 = build_packet(config.packet, config.grid)
    final, traj = propagate(
        state0,
        config.potential,
        config.propagator,
        config.stop,
        record_every=config.record_every,
        units=config.units,
        split=_split_position(config),
        snapshot_every=snapshot_every,
    )
    return _measure_run(config, state0, final, traj), traj


def run(config: RunConfig) -> ScatteringResult:
    """Build the packet, propagate to the stop criterion, measure, and attach
    the analytic prediction for the same energy and potential."""
    return run_detailed(config)[0]


def result_table(config: RunConfig, result: ScatteringResult) -> Table:
    """Single-row table for one finished run."""
    return Table(CSV_HEADERS, (_result_row(config, result),), (result.config_fingerprint,))


def _result_row(config: RunConfig, result: ScatteringResult) -> tuple[float, ...]:
    units = config.units
    pk = config.packet
    energy = (units.hbar * pk.k0) ** 2 / (2.0 * units.mass)
    levels = config.potential.levels
    v0 = levels[-1] - levels[0]
    e_over_v0 = energy / v0 if v0 != 0.0 else math.inf
    lam = pk.carrier_wavelength
    w_t_ratio = result.width_transmitted / result.width_incident
    window_measured = result.timing.measured if result.timing is not None else math.nan
    window_analytic = pk.width * units.mass / (units.hbar * pk.k0)
    return (
        e_over_v0,
        pk.width / lam,
        result.analytic.reflection,
        result.analytic.transmission,
        result.p_left,
        result.p_right,
        w_t_ratio,
        result.v_incident,
        result.v_transmitted,
        window_measured,
        window_analytic,
    )


def _project(headers: Sequence[str], rows, outputs: tuple[str, ...]):
    if tuple(outputs) == tuple(headers):
        return tuple(headers), tuple(tuple(r) for r in rows)
    idx = [headers.index(name) for name in outputs]
    return tuple(outputs), tuple(tuple(row[i] for i in idx) for row in rows)


def _sweep_row_config(base: RunConfig, e_over_v0: float) -> RunConfig:
    """Same packet and grid, step height set to energy/e_over_v0."""
    levels = base.potential.levels
    if len(levels) != 2:
        raise ConfigError("energy-ratio sweeps need a two-level (single step) potential")
    units = base.units
    energy = (units.hbar * base.packet.k0) ** 2 / (2.0 * units.mass)
    v0 = energy / e_over_v0
    potential = PiecewiseConstantPotential(
        boundaries=base.potential.boundaries,
        levels=(levels[0], levels[0] + v0),
    )
    return replace(base, potential=potential)


def _run_rows(configs: Sequence[RunConfig], jobs: int):
    """Run configs in order, yielding results; parallel when jobs > 1."""
    if jobs <= 1:
        for cfg in configs:
            yield run(cfg)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(run, configs)


def _table_with_partial(configs, jobs, axis_values, label) -> Table:
    rows: list[tuple[float, ...]] = []
    fps: list[str] = []
    try:
        for cfg, result in zip(configs, _run_rows(configs, jobs)):
            rows.append(_result_row(cfg, result))
            fps.append(cfg.fingerprint)
    except Exception as exc:
        partial = Table(CSV_HEADERS, tuple(rows), tuple(fps))
        err = PhysicsError(
            f"{label} aborted at axis value {axis_values[len(rows)]:g}: {exc}"
        )
        err.partial_table = partial
        raise err from exc
    return Table(CSV_HEADERS, tuple(rows), tuple(fps))


def sweep(spec: SweepSpec, jobs: int = 1) -> Table:
    """One full run per energy ratio, rows ordered by ascending ratio.

    The incident packet, grid, and propagator are held fixed; only the step
    height varies, so rows differ in physics, not in numerics.
    """
    if not isinstance(spec.axis, EnergyRatio):
        raise ConfigError("sweep needs an EnergyRatio axis")
    values = tuple(sorted(spec.axis.values))
    configs = [_sweep_row_config(spec.base, v) for v in values]
    table = _table_with_partial(configs, jobs, values, "sweep")
    headers, rows = _project(table.headers, table.rows, spec.outputs)
    return Table(headers, rows, table.fingerprints)


# Convergence-run geometry constants.  The spatial discretisation biases
# P_left by O(dx^2) with a width-independent piece (sampled-step scattering
# differs from the continuum step) plus a packet-bandwidth piece; holding dx
# identical across rows cancels the width-independent piece in every
# row-to-row comparison, which is what makes the error sequence reliably
# monotone.  The envelope's ballistic spectral tail is kept below ~2e-9 at
# the walls.
_ROW_DX_PER_LAMBDA = 200.0
_ROW_TAIL_BUDGET = 2e-9
_ROW_CLEARANCE = 15.0


def _tail_speed(pk: PacketSpec, budget: float) -> float:
    """Smallest speed faster than all but `budget` of the packet's spectrum."""
    w = pk.width
    scratch = GridSpec(pk.center - 6.0 * w, pk.center + 6.0 * w, 2**15)
    spectrum = momentum_spectrum(build_packet(pk, scratch))
    k = spectrum.wavenumbers
    dk = k[1] - k[0]
    tail = np.cumsum(spectrum.density[::-1])[::-1] * dk  # P(K > k) at each k
    above = np.nonzero(tail < budget)[0]
    if above.size == 0:
        raise PhysicsError("packet spectrum never falls below the tail budget")
    return float(k[above[0]])


def convergence_row_config(base: RunConfig, w_over_lambda: float) -> RunConfig:
    """Geometry recipe for one convergence row.

    Keeps the carrier, step, scheme, and taper of the base config, and
    rebuilds packet position, grid extent, and resolution for the requested
    width: the domain is sized so that neither the reflected packet nor the
    fast spectral tail of the envelope reaches a wall before the run
    separates, and the grid step is fine enough that the spatial
    discretisation bias stays well below the narrowband convergence floor.
    """
    units = base.units
    k0 = base.packet.k0
    lam = base.packet.carrier_wavelength
    w = w_over_lambda * lam
    v_g = units.hbar * k0 / units.mass

    pk = replace(base.packet, width=w, center=0.0)
    half = pk.support_halfwidth()
    x0 = -(half + _ROW_CLEARANCE)
    pk = replace(pk, center=x0)

    window = getattr(base.stop, "window", 10.0 * lam)
    settle = 10 * base.record_every * base.propagator.dt
    t_enter = _ROW_CLEARANCE / v_g
    t_end = t_enter + 2.0 * half / v_g + (window + half - 0.5 * w) / v_g + settle + 3.0

    v_tail = max(_tail_speed(pk, _ROW_TAIL_BUDGET), 1.2 * v_g)
    x_max = (x0 + half) + v_tail * t_end + 30.0
    x_min = min(x0 - half - 20.0, -v_g * (t_end - t_enter) - 30.0)
    # dx pinned to the same fraction of the carrier wavelength in every row
    n_points = math.ceil((x_max - x_min) * _ROW_DX_PER_LAMBDA / lam)
    grid = GridSpec(x_min=x_min, x_max=x_max, n_points=n_points)
    return replace(base, packet=pk, grid=grid)


def convergence_study(spec: SweepSpec, jobs: int = 1) -> Table:
    """One full run per packet width at fixed energy ratio.

    The absolute error |p_left - r_analytic| must not increase over the
    final three rows; a violation raises PhysicsError carrying the full
    table as `partial_table`.
    """
    if not isinstance(spec.axis, PacketWidth):
        raise ConfigError("convergence studies need a PacketWidth axis")
    if len(spec.axis.values) < 3:
        raise ConfigError("convergence studies need at least 3 width values")
    values = tuple(sorted(spec.axis.values))
    configs = [convergence_row_config(spec.base, v) for v in values]
    table = _table_with_partial(configs, jobs, values, "convergence study")

    err = np.abs(table.column("p_left") - table.column("r_analytic"))
    last3 = err[-3:]
    if not np.all(np.diff(last3) <= 0.0):
        exc = PhysicsError(
            "convergence failure: |p_left - r_analytic| increases over the "
            f"final three widths: {last3.tolist()}"
        )
        exc.partial_table = table
        raise exc
    headers, rows = _project(table.headers, table.rows, spec.outputs)
    return Table(headers, rows, table.fingerprints)


def analytic_table(base: RunConfig, e_over_v0_values: Sequence[float]) -> Table:
    """Stationary-only rows (no simulation); measured columns are NaN."""
    values = tuple(sorted(e_over_v0_values))
    if not values or any(not (v > 0 and math.isfinite(v)) for v in values):
        raise ConfigError(f"energy ratios must be positive and finite, got {values}")
    rows = []
    fps = []
    for v in values:
        cfg = _sweep_row_config(base, v)
        pair = analytic_probabilities(cfg)
        pk = cfg.packet
        window_analytic = pk.width * cfg.units.mass / (cfg.units.hbar * pk.k0)
        rows.append(
            (
                v,
                pk.width / pk.carrier_wavelength,
                pair.reflection,
                pair.transmission,
                math.nan,
                math.nan,
                math.nan,
                math.nan,
                math.nan,
                math.nan,
                window_analytic,
            )
        )
        fps.append(cfg.fingerprint)
    return Table(CSV_HEADERS, tuple(rows), tuple(fps))


def _cell(value: float) -> str:
    return repr(float(value))


def emit(table: Table, format: Literal["csv", "json", "plot"], path) -> list[Path]:
    """Write the table to path in the requested format.

    csv: exact headers, newline endings, shortest round-trip floats.
    json: rows as objects mirroring the column names, plus the config
    fingerprint per row (NaN becomes null).
    plot: a plain-text matplotlib script next to its own copy of the CSV;
    the script reads only that CSV and renders a PNG beside it.
    """
    if not table.rows:
        raise ValueError("refusing to emit an empty table")
    path = Path(path)
    try:
        if format == "csv":
            _write_csv(table, path)
            return [path]
        if format == "json":
            payload = {"headers": list(table.headers), "rows": []}
            for i, row in enumerate(table.rows):
                entry = {
                    name: (None if math.isnan(v) else v)
                    for name, v in zip(table.headers, row)
                }
                if table.fingerprints:
                    entry["config_fingerprint"] = table.fingerprints[i]
                payload["rows"].append(entry)
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                json.dump(payload, fh, indent=2)
                fh.write("\n")
            return [path]
        if format == "plot":
            base = path.with_suffix("") if path.suffix == ".py" else path
            script = base.with_suffix(".py")
            csv_path = base.with_suffix(".csv")
            _write_csv(table, csv_path)
            script.write_text(
                _PLOT_SCRIPT.format(csv_name=csv_path.name, png_name=base.with_suffix(".png").name),
                encoding="ascii",
            )
            return [script, csv_path]
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    raise ValueError(f"unknown emit format {format!r}")


def _write_csv(table: Table, path: Path) -> None:
    lines = [",".join(table.headers)]
    lines += [",".join(_cell(v) for v in row) for row in table.rows]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path) -> Table:
    """Parse a CSV produced by emit back into a Table."""
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot read table {path}: {exc}") from exc
    lines = [ln for ln in text.split("\n") if ln]
    if not lines:
        raise ValueError(f"{path}: empty table file")
    headers = tuple(lines[0].split(","))
    rows = tuple(tuple(float(cell) for cell in ln.split(",")) for ln in lines[1:])
    return Table(headers, rows)


_PLOT_SCRIPT = '''"""Plot measured vs analytic scattering results from {csv_name}."""
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

with open("{csv_name}", newline="") as fh:
    reader = csv.reader(fh)
    headers = next(reader)
    rows = [[float(c) for c in row] for row in reader]

col = {{name: [row[i] for row in rows] for i, name in enumerate(headers)}}

widths = col.get("w_over_lambda", [])
if len(set(widths)) > 1:
    # Convergence layout: packet-width axis, error against the analytic value.
    err = [abs(p - r) for p, r in zip(col["p_left"], col["r_analytic"])]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(widths, err, "o-", label="|p_left - R|")
    ax.set_xlabel("packet width / carrier wavelength")
    ax.set_ylabel("absolute error")
    ax.legend()
else:
    # Sweep layout: energy-ratio axis, measured points on analytic curves.
    x = col["e_over_v0"]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(x, col["r_analytic"], "-", label="R analytic")
    ax.plot(x, col["t_analytic"], "-", label="T analytic")
    ax.plot(x, col["p_left"], "o", label="P left (measured)")
    ax.plot(x, col["p_right"], "s", label="P right (measured)")
    ax.set_xscale("log")
    ax.set_xlabel("E / V0")
    ax.set_ylabel("probability")
    ax.legend()
fig.tight_layout()
fig.savefig("{png_name}", dpi=150)
print("wrote {png_name}")
'''
