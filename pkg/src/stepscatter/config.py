"""Run configuration: one flat INI file describes a complete scattering run.

A RunConfig bundles everything `harness.run` needs (potential, packet, grid,
propagator, stop criterion, units, record cadence).  Serialisation is
canonical: fixed section and key order, floats written with repr (shortest
round-trip form), so serialize(parse(text)) == text byte for byte and the
SHA-256 fingerprint of the canonical text identifies the run.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass

from .errors import ConfigError
from .evolve import MaxTime, PropagatorConfig, Separated, StopCriterion
from .packet import FlatTop, Gaussian, GridSpec, PacketSpec
from .stationary import NATURAL, PiecewiseConstantPotential, PotentialProfile, UnitSystem

__all__ = [
    "RunConfig",
    "default_config",
    "default_study_config",
    "parse_config",
    "serialize_config",
    "load_config",
    "save_config",
]


@dataclass(frozen=True, slots=True)
class RunConfig:
    """Everything needed to reproduce one propagation, value-like."""

    potential: PotentialProfile
    packet: PacketSpec
    grid: GridSpec
    propagator: PropagatorConfig
    stop: StopCriterion
    units: UnitSystem = NATURAL
    record_every: int = 1

    def __post_init__(self):
        if self.record_every < 1:
            raise ConfigError(f"record_every must be >= 1, got {self.record_every}")
        # Cross-field check: packet support strictly inside the grid.
        half = self.packet.support_halfwidth()
        lo, hi = self.packet.center - half, self.packet.center + half
        if not (lo > self.grid.x_min and hi < self.grid.x_max):
            raise ConfigError(
                f"packet support [{lo:g}, {hi:g}] does not lie strictly inside "
                f"the grid [{self.grid.x_min:g}, {self.grid.x_max:g}]"
            )

    @property
    def fingerprint(self) -> str:
        """Deterministic 16-hex-digit identifier of the canonical form."""
        digest = hashlib.sha256(serialize_config(self).encode("ascii"))
        return digest.hexdigest()[:16]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_seq(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


def serialize_config(config: RunConfig) -> str:
    """Canonical INI text for config; stable under parse/serialize cycles."""
    pot = config.potential
    pk = config.packet
    lines = [
        "[units]",
        f"hbar = {_fmt(config.units.hbar)}",
        f"mass = {_fmt(config.units.mass)}",
        "",
        "[potential]",
        f"boundaries = {_fmt_seq(pot.boundaries)}",
        f"levels = {_fmt_seq(pot.levels)}",
        "",
        "[grid]",
        f"x_min = {_fmt(float(config.grid.x_min))}",
        f"x_max = {_fmt(float(config.grid.x_max))}",
        f"n_points = {config.grid.n_points}",
        "",
        "[packet]",
    ]
    if isinstance(pk.shape, FlatTop):
        lines += [
            "shape = flat_top",
            f"taper_fraction = {_fmt(float(pk.shape.taper_fraction))}",
        ]
    elif isinstance(pk.shape, Gaussian):
        lines += [
            "shape = gaussian",
            f"sigma = {_fmt(float(pk.shape.sigma))}",
        ]
    else:  # pragma: no cover - no other shapes exist
        raise ConfigError(f"unsupported packet shape {type(pk.shape).__name__}")
    lines += [
        f"center = {_fmt(float(pk.center))}",
        f"width = {_fmt(float(pk.width))}",
        f"k0 = {_fmt(float(pk.k0))}",
        "",
        "[propagator]",
        f"scheme = {config.propagator.scheme}",
        f"dt = {_fmt(float(config.propagator.dt))}",
        f"boundary = {config.propagator.boundary}",
        f"record_every = {config.record_every}",
        "",
        "[stop]",
    ]
    if isinstance(config.stop, Separated):
        lines += [
            "kind = separated",
            f"window = {_fmt(float(config.stop.window))}",
            f"epsilon = {_fmt(float(config.stop.epsilon))}",
        ]
    elif isinstance(config.stop, MaxTime):
        lines += [
            "kind = max_time",
            f"t = {_fmt(float(config.stop.t))}",
        ]
    else:  # pragma: no cover
        raise ConfigError(f"unsupported stop criterion {type(config.stop).__name__}")
    return "\n".join(lines) + "\n"


def _floats(raw: str, context: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"{context}: expected comma-separated numbers, got {raw!r}") from exc


def _get(section, key: str, cast, context: str):
    if key not in section:
        raise ConfigError(f"missing key {key!r} in section [{context}]")
    raw = section[key]
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{context}] {key} = {raw!r}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse INI text into a RunConfig, validating every field."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for name in ("units", "potential", "grid", "packet", "propagator", "stop"):
        if name not in parser:
            raise ConfigError(f"missing section [{name}]")

    try:
        units = UnitSystem(
            hbar=_get(parser["units"], "hbar", float, "units"),
            mass=_get(parser["units"], "mass", float, "units"),
        )
        potential = PiecewiseConstantPotential(
            boundaries=_floats(_get(parser["potential"], "boundaries", str, "potential"), "boundaries"),
            levels=_floats(_get(parser["potential"], "levels", str, "potential"), "levels"),
        )
        grid = GridSpec(
            x_min=_get(parser["grid"], "x_min", float, "grid"),
            x_max=_get(parser["grid"], "x_max", float, "grid"),
            n_points=_get(parser["grid"], "n_points", int, "grid"),
        )
        sect = parser["packet"]
        shape_name = _get(sect, "shape", str, "packet")
        if shape_name == "flat_top":
            shape = FlatTop(taper_fraction=_get(sect, "taper_fraction", float, "packet"))
        elif shape_name == "gaussian":
            shape = Gaussian(sigma=_get(sect, "sigma", float, "packet"))
        else:
            raise ConfigError(f"unknown packet shape {shape_name!r}")
        packet = PacketSpec(
            shape=shape,
            center=_get(sect, "center", float, "packet"),
            width=_get(sect, "width", float, "packet"),
            k0=_get(sect, "k0", float, "packet"),
        )
        sect = parser["propagator"]
        propagator = PropagatorConfig(
            scheme=_get(sect, "scheme", str, "propagator"),
            dt=_get(sect, "dt", float, "propagator"),
            boundary=_get(sect, "boundary", str, "propagator"),
        )
        record_every = int(sect.get("record_every", "1"))
        sect = parser["stop"]
        kind = _get(sect, "kind", str, "stop")
        if kind == "separated":
            stop: StopCriterion = Separated(
                window=_get(sect, "window", float, "stop"),
                epsilon=_get(sect, "epsilon", float, "stop"),
            )
        elif kind == "max_time":
            stop = MaxTime(t=_get(sect, "t", float, "stop"))
        else:
            raise ConfigError(f"unknown stop kind {kind!r}")
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        potential=potential,
        packet=packet,
        grid=grid,
        propagator=propagator,
        stop=stop,
        units=units,
        record_every=record_every,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="ascii") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def save_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(serialize_config(config))


def default_config() -> RunConfig:
    """The shipped headline scenario: E = 2 V0, k0 = 5, width 200 carrier
    wavelengths, natural units."""
    k0 = 5.0
    lam = 2.0 * math.pi / k0
    width = 200.0 * lam
    return RunConfig(
        potential=PiecewiseConstantPotential(boundaries=(0.0,), levels=(0.0, 6.25)),
        packet=PacketSpec(shape=FlatTop(taper_fraction=0.1), center=-155.0, width=width, k0=k0),
        grid=GridSpec(x_min=-500.0, x_max=500.0, n_points=2**17),
        propagator=PropagatorConfig(scheme="split_step", dt=3e-3),
        stop=Separated(window=10.0 * lam, epsilon=1e-6),
        units=NATURAL,
        record_every=83,
    )


def default_study_config() -> RunConfig:
    """Compact base for sweeps and convergence studies.

    A 25-wavelength packet with a heavier taper (narrower spectral tails)
    and the unconditionally stable scheme, so per-row runs stay cheap and
    the geometry recipes can rescale it safely.
    """
    k0 = 5.0
    lam = 2.0 * math.pi / k0
    width = 25.0 * lam
    return RunConfig(
        potential=PiecewiseConstantPotential(boundaries=(0.0,), levels=(0.0, 6.25)),
        packet=PacketSpec(shape=FlatTop(taper_fraction=0.4), center=-40.0, width=width, k0=k0),
        grid=GridSpec(x_min=-160.0, x_max=250.0, n_points=2**16),
        propagator=PropagatorConfig(scheme="crank_nicolson", dt=4e-3),
        stop=Separated(window=10.0 * lam, epsilon=1e-6),
        units=NATURAL,
        record_every=62,
    )
