"""Quasi-monochromatic wave packets on uniform 1-D grids.

A packet is a real envelope times a carrier, ψ(x) = e(x) e^{ik0 x},
normalised so Σ|ψ|² dx = 1.  The workhorse envelope is a flat-top
(cosine-tapered rectangle): constant over most of its nominal width w and
rolled off smoothly at the ends, so |ψ|² ≈ |A|² over the flat part with
|A|² w ≈ 1, like a normalised incident plane wave chopped to finite length.

Packet width is measured by the equivalent-rectangle (inverse
participation) form

    w_eff = (Σ|ψ|² dx)² / (Σ|ψ|⁴ dx),

which returns the exact support width for an ideal rectangle and σ√(2π)
for a Gaussian with |ψ|² ∝ exp(-x²/σ²).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "FlatTop",
    "Gaussian",
    "PacketSpec",
    "WaveState",
    "MomentumSpectrum",
    "NarrowbandReport",
    "build_packet",
    "effective_width",
    "momentum_spectrum",
    "require_narrowband",
]

# Quasi-monochromatic analysis assumes many carrier oscillations per packet.
NARROW_PACKET_RATIO = 20.0


@dataclass(frozen=True, slots=True)
class GridSpec:
    """Uniform grid of n_points samples with spacing (x_max - x_min)/n_points.

    The right endpoint is excluded, which makes the grid directly usable as
    one period of a periodic domain.
    """

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if not self.x_max > self.x_min:
            raise ValueError(f"need x_max > x_min, got [{self.x_min}, {self.x_max}]")
        if self.n_points < 16:
            raise ValueError(f"need at least 16 points, got {self.n_points}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    def wavenumbers(self) -> np.ndarray:
        """FFT-ordered angular wavenumbers for this grid."""
        return 2.0 * math.pi * sfft.fftfreq(self.n_points, d=self.dx)


@dataclass(frozen=True, slots=True)
class FlatTop:
    """Cosine-tapered rectangle.

    Flat over (1 - taper_fraction)·w centred on the packet, with a
    raised-cosine ramp of length taper_fraction·w on each side, half of
    which overhangs the nominal width (total support (1 + taper_fraction)·w).
    """

    taper_fraction: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.taper_fraction <= 0.5:
            raise ValueError(f"taper_fraction must be in (0, 0.5], got {self.taper_fraction}")


@dataclass(frozen=True, slots=True)
class Gaussian:
    """Gaussian envelope exp(-(x - x0)²/(2σ²)), i.e. |ψ|² ∝ exp(-(x - x0)²/σ²)."""

    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True, slots=True)
class PacketSpec:
    """Envelope shape plus centre position, nominal width and carrier wavenumber."""

    shape: FlatTop | Gaussian
    center: float
    width: float
    k0: float

    def __post_init__(self):
        if not (self.width > 0.0 and math.isfinite(self.width)):
            raise ValueError(f"width must be positive, got {self.width}")
        if not (self.k0 > 0.0 and math.isfinite(self.k0)):
            raise ValueError(f"carrier wavenumber must be positive, got {self.k0}")
        if not math.isfinite(self.center):
            raise ValueError(f"center must be finite, got {self.center}")

    @property
    def carrier_wavelength(self) -> float:
        return 2.0 * math.pi / self.k0

    def support_halfwidth(self) -> float:
        """Half-extent of the envelope; Gaussians are treated as 6σ wide."""
        if isinstance(self.shape, FlatTop):
            return 0.5 * (1.0 + self.shape.taper_fraction) * self.width
        return 6.0 * self.shape.sigma


@dataclass(frozen=True, slots=True)
class WaveState:
    """Complex field sampled on a grid at a given time."""

    grid: GridSpec
    psi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.psi.shape != (self.grid.n_points,):
            raise ValueError(
                f"field shape {self.psi.shape} does not match grid ({self.grid.n_points},)"
            )

    def norm(self) -> float:
        """Total probability Σ|ψ|² dx."""
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dx)


def _flat_top_envelope(u: np.ndarray, width: float, taper_fraction: float) -> np.ndarray:
    half_flat = 0.5 * (1.0 - taper_fraction) * width
    ramp = taper_fraction * width
    a = np.abs(u)
    env = np.zeros_like(a)
    env[a <= half_flat] = 1.0
    on_ramp = (a > half_flat) & (a < half_flat + ramp)
    env[on_ramp] = np.cos(0.5 * math.pi * (a[on_ramp] - half_flat) / ramp) ** 2
    return env


def build_packet(spec: PacketSpec, grid: GridSpec) -> WaveState:
    """Construct and normalise the packet at t = 0.

    The envelope support must lie strictly inside the grid.  A flat-top
    narrower than NARROW_PACKET_RATIO carrier wavelengths triggers a warning:
    such packets are too broadband for plane-wave scattering estimates.
    """
    half = spec.support_halfwidth()
    if not (spec.center - half > grid.x_min and spec.center + half < grid.x_max):
        raise ValueError(
            f"packet support [{spec.center - half:g}, {spec.center + half:g}] does not lie "
            f"strictly inside the grid [{grid.x_min:g}, {grid.x_max:g}]"
        )
    if isinstance(spec.shape, FlatTop) and spec.width < NARROW_PACKET_RATIO * spec.carrier_wavelength:
        warnings.warn(
            f"packet width {spec.width:g} is below {NARROW_PACKET_RATIO:g} carrier "
            f"wavelengths ({spec.width / spec.carrier_wavelength:.2f}); plane-wave "
            "scattering estimates degrade for broadband packets",
            stacklevel=2,
        )

    x = grid.x()
    u = x - spec.center
    if isinstance(spec.shape, FlatTop):
        env = _flat_top_envelope(u, spec.width, spec.shape.taper_fraction)
    else:
        env = np.exp(-(u**2) / (2.0 * spec.shape.sigma**2))
    psi = env.astype(complex) * np.exp(1j * spec.k0 * x)
    nrm = math.sqrt(float(np.sum(np.abs(psi) ** 2)) * grid.dx)
    if nrm == 0.0:
        raise ValueError("packet is not resolved by the grid (all samples zero)")
    psi /= nrm
    return WaveState(grid=grid, psi=psi, time=0.0)


def effective_width(state: WaveState) -> float:
    """Equivalent-rectangle width (Σ|ψ|² dx)² / (Σ|ψ|⁴ dx)."""
    density = np.abs(state.psi) ** 2
    num = float(np.sum(density) * state.grid.dx) ** 2
    den = float(np.sum(density**2) * state.grid.dx)
    if den == 0.0:
        raise ValueError("effective width of a zero field is undefined")
    return num / den


@dataclass(frozen=True, slots=True)
class MomentumSpectrum:
    """|ψ̃(k)|² on the grid's wavenumber axis, with centroid and RMS spread.

    density is normalised so Σ density dk = Σ|ψ|² dx.
    """

    wavenumbers: np.ndarray
    density: np.ndarray
    centroid: float
    sigma_k: float


def momentum_spectrum(state: WaveState) -> MomentumSpectrum:
    """Discrete Fourier magnitudes of the field, ordered by wavenumber."""
    n = state.grid.n_points
    dx = state.grid.dx
    psi_k = sfft.fft(state.psi)
    # |ψ̃|² dk with ψ̃ = dx/sqrt(2π)·FFT reproduces Σ|ψ|² dx (Parseval)
    density = np.abs(psi_k) ** 2 * dx**2 / (2.0 * math.pi)
    k = 2.0 * math.pi * sfft.fftfreq(n, d=dx)
    order = np.argsort(k)
    k = k[order]
    density = density[order]
    total = float(np.sum(density))
    if total == 0.0:
        raise ValueError("momentum spectrum of a zero field is undefined")
    centroid = float(np.sum(k * density) / total)
    sigma_k = math.sqrt(float(np.sum((k - centroid) ** 2 * density) / total))
    return MomentumSpectrum(wavenumbers=k, density=density, centroid=centroid, sigma_k=sigma_k)


@dataclass(frozen=True, slots=True)
class NarrowbandReport:
    ok: bool
    ratio: float
    sigma_k: float
    centroid: float
    k0: float
    max_ratio: float


def require_narrowband(state: WaveState, k0: float, max_ratio: float) -> NarrowbandReport:
    """Check that the spectral spread is small against the carrier, σ_k/k0 ≤ max_ratio."""
    if not (k0 > 0.0 and math.isfinite(k0)):
        raise ValueError(f"carrier wavenumber must be positive, got {k0}")
    if not (max_ratio > 0.0):
        raise ValueError(f"max_ratio must be positive, got {max_ratio}")
    spec = momentum_spectrum(state)
    ratio = spec.sigma_k / k0
    return NarrowbandReport(
        ok=ratio <= max_ratio,
        ratio=ratio,
        sigma_k=spec.sigma_k,
        centroid=spec.centroid,
        k0=k0,
        max_ratio=max_ratio,
    )
