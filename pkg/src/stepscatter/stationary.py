"""Stationary scattering off piecewise-constant potentials in one dimension.

A rightward plane wave A e^{ikx} hitting a potential step V(x) = V0 θ(x)
splits into a reflected wave B e^{-ikx} and a transmitted wave C e^{iκx},
with k = sqrt(2mE)/ħ and κ = sqrt(2m(E - V0))/ħ.  Matching ψ and ψ' at the
step gives

    B/A = (k - κ)/(k + κ),        C/A = 2k/(k + κ),

so R = |B/A|² and T = (Re κ / k)|C/A|².  Below the step (E < V0) κ is taken
positive imaginary, the transmitted wave is evanescent and T is exactly 0.
General piecewise-constant profiles are handled by composing 2x2 transfer
matrices across the boundaries.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "UnitSystem",
    "NATURAL",
    "StepPotential",
    "PiecewiseConstantPotential",
    "PotentialProfile",
    "ScatteringAmplitudes",
    "ProbabilityPair",
    "wavenumbers",
    "step_amplitudes",
    "transfer_matrix_amplitudes",
    "reflection_probability",
    "transmission_probability",
    "scattering_probabilities",
]


@dataclass(frozen=True, slots=True)
class UnitSystem:
    """Values of ħ and the particle mass; defaults are natural units ħ = m = 1."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0.0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar}")
        if not (self.mass > 0.0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be positive and finite, got {self.mass}")


NATURAL = UnitSystem()


@dataclass(frozen=True, slots=True)
class StepPotential:
    """Single step at the origin: V(x) = 0 for x < 0, V(x) = v0 for x > 0."""

    v0: float

    def __post_init__(self):
        if not math.isfinite(self.v0):
            raise ValueError(f"step height must be finite, got {self.v0}")

    @property
    def boundaries(self) -> tuple[float, ...]:
        return (0.0,)

    @property
    def levels(self) -> tuple[float, ...]:
        return (0.0, self.v0)

    def sample(self, x: np.ndarray) -> np.ndarray:
        return _sample_levels(self.boundaries, self.levels, x)


@dataclass(frozen=True, slots=True)
class PiecewiseConstantPotential:
    """Constant level between consecutive boundaries; levels has one more entry."""

    boundaries: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        if len(self.levels) != len(self.boundaries) + 1:
            raise ValueError(
                f"need len(levels) == len(boundaries) + 1, got "
                f"{len(self.levels)} levels for {len(self.boundaries)} boundaries"
            )
        if len(self.boundaries) == 0:
            raise ValueError("need at least one boundary")
        if any(not math.isfinite(b) for b in self.boundaries):
            raise ValueError("boundaries must be finite")
        if any(not math.isfinite(v) for v in self.levels):
            raise ValueError("levels must be finite")
        if any(b1 <= b0 for b0, b1 in zip(self.boundaries, self.boundaries[1:])):
            raise ValueError(f"boundaries must be strictly increasing, got {self.boundaries}")

    def sample(self, x: np.ndarray) -> np.ndarray:
        return _sample_levels(self.boundaries, self.levels, x)


PotentialProfile = StepPotential | PiecewiseConstantPotential


def _sample_levels(boundaries, levels, x: np.ndarray) -> np.ndarray:
    """Sample the profile on a grid; a point exactly on a boundary gets the
    mean of the two adjacent levels (first-order consistent with the jump)."""
    x = np.asarray(x, dtype=float)
    idx = np.searchsorted(boundaries, x, side="right")
    out = np.asarray(levels, dtype=float)[idx]
    for j, b in enumerate(boundaries):
        out[x == b] = 0.5 * (levels[j] + levels[j + 1])
    return out


@dataclass(frozen=True, slots=True)
class ScatteringAmplitudes:
    """Amplitude ratios for a wave incident from the left.

    k and kappa are the wavenumbers of the outermost left and right regions;
    kappa is positive imaginary when the outgoing side is classically
    forbidden.  b_over_a is the reflected and c_over_a the transmitted
    amplitude relative to the incident one.
    """

    energy: float
    k: float
    kappa: complex
    b_over_a: complex
    c_over_a: complex


@dataclass(frozen=True, slots=True)
class ProbabilityPair:
    reflection: float
    transmission: float


def wavenumbers(energy: float, v0: float, units: UnitSystem = NATURAL) -> tuple[float, complex]:
    """Incident and transmitted wavenumbers for a step of height v0.

    k = sqrt(2mE)/ħ is always real positive.  kappa = sqrt(2m(E - v0))/ħ is
    real positive above the step, exactly 0 at E == v0, and positive
    imaginary below it so the transmitted wave decays as x -> +inf.
    """
    if not (energy > 0.0 and math.isfinite(energy)):
        raise ValueError(f"energy must be positive and finite, got {energy}")
    if not math.isfinite(v0):
        raise ValueError(f"step height must be finite, got {v0}")
    two_m = 2.0 * units.mass
    k = math.sqrt(two_m * energy) / units.hbar
    diff = energy - v0
    if diff >= 0.0:
        kappa = complex(math.sqrt(two_m * diff) / units.hbar, 0.0)
    else:
        kappa = complex(0.0, math.sqrt(two_m * (-diff)) / units.hbar)
    return k, kappa


def step_amplitudes(k: float, kappa: complex, units: UnitSystem = NATURAL) -> ScatteringAmplitudes:
    """Reflected and transmitted amplitude ratios at a single step.

    Continuity of ψ and ψ' at the step yields B/A = (k - κ)/(k + κ) and
    C/A = 2k/(k + κ); the identity 1 + B/A = C/A holds exactly.
    """
    if not (k > 0.0 and math.isfinite(k)):
        raise ValueError(f"incident wavenumber must be positive, got {k}")
    kappa = complex(kappa)
    energy = (units.hbar * k) ** 2 / (2.0 * units.mass)
    b_over_a = (k - kappa) / (k + kappa)
    c_over_a = 2.0 * k / (k + kappa)
    return ScatteringAmplitudes(energy=energy, k=k, kappa=kappa, b_over_a=b_over_a, c_over_a=c_over_a)


def reflection_probability(amps: ScatteringAmplitudes) -> float:
    """R = |B/A|^2."""
    return abs(amps.b_over_a) ** 2


def transmission_probability(amps: ScatteringAmplitudes) -> float:
    """T = (Re κ / k) |C/A|^2; exactly 0 when the outgoing wave is evanescent.

    The Re κ / k factor is the ratio of transmitted to incident probability
    flux carried per unit amplitude, so R + T = 1 whenever κ is real.
    """
    kr = amps.kappa.real
    if kr <= 0.0:
        return 0.0
    return (kr / amps.k) * abs(amps.c_over_a) ** 2


def scattering_probabilities(amps: ScatteringAmplitudes) -> ProbabilityPair:
    return ProbabilityPair(
        reflection=reflection_probability(amps),
        transmission=transmission_probability(amps),
    )


def _region_wavenumber(energy: float, level: float, units: UnitSystem) -> complex:
    two_m = 2.0 * units.mass
    diff = energy - level
    if diff >= 0.0:
        return complex(math.sqrt(two_m * diff) / units.hbar, 0.0)
    return complex(0.0, math.sqrt(two_m * (-diff)) / units.hbar)


def transfer_matrix_amplitudes(
    potential: PotentialProfile, energy: float, units: UnitSystem = NATURAL
) -> ScatteringAmplitudes:
    """Scattering amplitudes for a general piecewise-constant profile.

    In region j the solution is a_j e^{i q_j x} + b_j e^{-i q_j x}.  Matching
    ψ and ψ' across each boundary links (a_j, b_j) to (a_{j+1}, b_{j+1}) by a
    2x2 matrix; the ordered product M maps the outgoing-only right state
    (C, 0) back to (A, B).  Then B/A = M10/M00 and C/A = 1/M00.

    For a single step at the origin this reproduces step_amplitudes exactly.
    Very wide classically forbidden regions can overflow the growing
    exponential; that is inherent to the transfer-matrix form.
    """
    if not (energy > 0.0 and math.isfinite(energy)):
        raise ValueError(f"energy must be positive and finite, got {energy}")
    boundaries = potential.boundaries
    levels = potential.levels
    if energy <= levels[0]:
        raise ValueError(
            f"incident region must be classically allowed: energy {energy} "
            f"<= leftmost level {levels[0]}"
        )
    q = [_region_wavenumber(energy, v, units) for v in levels]

    m = np.eye(2, dtype=complex)
    for x_b, q_l, q_r in zip(boundaries, q[:-1], q[1:]):
        if q_l == 0 or q_r == 0:
            raise ValueError(
                f"energy {energy} coincides with an interior level; "
                "the transfer matrix is singular there"
            )
        ratio = q_r / q_l
        plus = 0.5 * (1.0 + ratio)
        minus = 0.5 * (1.0 - ratio)
        step = np.array(
            [
                [plus * cmath.exp(1j * (q_r - q_l) * x_b), minus * cmath.exp(-1j * (q_r + q_l) * x_b)],
                [minus * cmath.exp(1j * (q_r + q_l) * x_b), plus * cmath.exp(-1j * (q_r - q_l) * x_b)],
            ]
        )
        m = m @ step

    b_over_a = m[1, 0] / m[0, 0]
    c_over_a = 1.0 / m[0, 0]
    return ScatteringAmplitudes(
        energy=energy, k=q[0].real, kappa=q[-1], b_over_a=b_over_a, c_over_a=c_over_a
    )
