"""Unitary propagation of wave packets under iħ ∂ψ/∂t = Hψ.

Two independent schemes, deliberately different in both discretisation and
boundary treatment so they cross-check each other:

* Crank-Nicolson: Cayley form (1 + iH dt/2ħ)ψ' = (1 - iH dt/2ħ)ψ with the
  3-point kinetic stencil and hard-wall boundaries, solved by a prefactored
  tridiagonal LU.  Exactly unitary and exactly conserves its own stencil
  Hamiltonian.
* Split-step spectral: symmetric kinetic/potential splitting
  e^{-iT dt/2ħ} e^{-iV dt/ħ} e^{-iT dt/2ħ} with the kinetic factor applied
  exactly in Fourier space; boundaries are periodic.  Inside multi-step
  advances the touching half-kinetic factors merge, costing one FFT pair
  per step.

Propagation records a Trajectory of scalar observables, aborts if
probability reaches the grid edge, and can stop either at a fixed time or
once the scattered packets have separated cleanly from the interaction
region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.fft as sfft
from scipy.linalg import get_lapack_funcs

from .errors import BoundaryContactError, ConfigError, NoCollisionError
from .measure import _left_weights
from .packet import GridSpec, WaveState
from .stationary import NATURAL, PotentialProfile, UnitSystem

__all__ = [
    "PropagatorConfig",
    "MaxTime",
    "Separated",
    "StopCriterion",
    "Trajectory",
    "TimingInfo",
    "recommended_dt",
    "make_propagator",
    "step",
    "propagate",
    "interaction_window",
    "energy_expectation",
]

Scheme = Literal["crank_nicolson", "split_step"]
Boundary = Literal["hard_wall", "periodic"]

_SCHEME_BOUNDARY: dict[str, str] = {
    "crank_nicolson": "hard_wall",
    "split_step": "periodic",
}

# Probability within 5 cells of an edge above this aborts the run.
EDGE_PROBABILITY_LIMIT = 1e-8
EDGE_CELLS = 5

# Detection threshold for the collision entry/exit in a trajectory.
COLLISION_THRESHOLD = 1e-3


@dataclass(frozen=True, slots=True)
class PropagatorConfig:
    """Scheme, time step and boundary treatment.

    Each scheme has exactly one consistent boundary treatment (hard walls
    for Crank-Nicolson, periodic for split-step); boundary may be omitted
    and defaults to the matching one, but a mismatch is a configuration
    error rather than a silent reinterpretation.
    """

    scheme: Scheme = "split_step"
    dt: float = 1e-3
    boundary: Boundary | None = None

    def __post_init__(self):
        if self.scheme not in _SCHEME_BOUNDARY:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ConfigError(f"time step must be positive and finite, got {self.dt}")
        expected = _SCHEME_BOUNDARY[self.scheme]
        if self.boundary is None:
            object.__setattr__(self, "boundary", expected)
        elif self.boundary != expected:
            raise ConfigError(
                f"scheme {self.scheme!r} requires {expected!r} boundaries, "
                f"got {self.boundary!r}"
            )


@dataclass(frozen=True, slots=True)
class MaxTime:
    """Stop once the evolved time reaches t."""

    t: float

    def __post_init__(self):
        if not (self.t > 0.0 and math.isfinite(self.t)):
            raise ConfigError(f"stop time must be positive and finite, got {self.t}")


@dataclass(frozen=True, slots=True)
class Separated:
    """Stop once the interaction region has emptied and the split has settled.

    Fires once the probability within |x - split| < window has first risen
    above the collision threshold (the packet actually reached the
    interaction region) and then dropped below epsilon, while the left/right
    probabilities have been stationary within epsilon over the last 10
    recorded samples.
    """

    window: float
    epsilon: float = 1e-6

    def __post_init__(self):
        if not (self.window > 0.0 and math.isfinite(self.window)):
            raise ConfigError(f"window must be positive and finite, got {self.window}")
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigError(f"epsilon must be in (0, 1), got {self.epsilon}")


StopCriterion = MaxTime | Separated

SEPARATED_HISTORY = 10


def recommended_dt(
    grid: GridSpec, potential: PotentialProfile, units: UnitSystem = NATURAL, safety: float = 0.2
) -> float:
    """Time step bounding the per-step phase of the fastest representable mode.

    dt = safety·ħ/E_max with E_max = (ħ²/2m)(π/dx)² + max|V|.  Conservative:
    packets occupying only low wavenumbers stay accurate at far larger steps.
    """
    e_kin = (units.hbar**2 / (2.0 * units.mass)) * (math.pi / grid.dx) ** 2
    e_max = e_kin + max(abs(v) for v in potential.levels)
    return safety * units.hbar / e_max


class _CrankNicolsonPropagator:
    """Prefactored Cayley step with hard walls (ψ = 0 beyond both ends)."""

    def __init__(self, grid: GridSpec, v: np.ndarray, dt: float, units: UnitSystem):
        self.grid = grid
        self.dt = dt
        n = grid.n_points
        hbar, m = units.hbar, units.mass
        # H = -(ħ²/2m)D² + V; D² is the 3-point stencil
        diag_h = hbar**2 / (m * grid.dx**2) + v
        off_h = -(hbar**2) / (2.0 * m * grid.dx**2)
        gamma = 0.5j * dt / hbar
        a_diag = 1.0 + gamma * diag_h
        a_off = np.full(n - 1, gamma * off_h)
        self._b_diag = 1.0 - gamma * diag_h
        self._b_off = -gamma * off_h
        gttrf, self._gttrs = get_lapack_funcs(("gttrf", "gttrs"), (a_diag,))
        dl, d, du, du2, ipiv, info = gttrf(a_off.copy(), a_diag.astype(complex), a_off.copy())
        if info != 0:
            raise RuntimeError(f"tridiagonal factorisation failed with info={info}")
        self._factors = (dl, d, du, du2, ipiv)

    def step(self, psi: np.ndarray) -> np.ndarray:
        rhs = self._b_diag * psi
        rhs[:-1] += self._b_off * psi[1:]
        rhs[1:] += self._b_off * psi[:-1]
        out, info = self._gttrs(*self._factors, rhs)
        if info != 0:
            raise RuntimeError(f"tridiagonal solve failed with info={info}")
        return out

    def advance(self, psi: np.ndarray, n_steps: int) -> np.ndarray:
        for _ in range(n_steps):
            psi = self.step(psi)
        return psi


class _SplitStepPropagator:
    """Symmetric split-step with the kinetic factor exact in Fourier space."""

    def __init__(self, grid: GridSpec, v: np.ndarray, dt: float, units: UnitSystem):
        self.grid = grid
        self.dt = dt
        k = 2.0 * math.pi * sfft.fftfreq(grid.n_points, d=grid.dx)
        kinetic = units.hbar * k**2 / (2.0 * units.mass)
        self._half_kinetic = np.exp(-0.5j * kinetic * dt)
        self._full_kinetic = np.exp(-1.0j * kinetic * dt)
        self._potential = np.exp(-1.0j * v * dt / units.hbar)

    def _kinetic_apply(self, psi: np.ndarray, factor: np.ndarray) -> np.ndarray:
        return sfft.ifft(factor * sfft.fft(psi, overwrite_x=True), overwrite_x=True)

    def step(self, psi: np.ndarray) -> np.ndarray:
        psi = self._kinetic_apply(psi, self._half_kinetic)
        psi = psi * self._potential
        return self._kinetic_apply(psi, self._half_kinetic)

    def advance(self, psi: np.ndarray, n_steps: int) -> np.ndarray:
        if n_steps <= 0:
            return psi
        # merge touching half-kinetic factors between steps: one FFT pair/step
        psi = self._kinetic_apply(psi.copy(), self._half_kinetic)
        for _ in range(n_steps - 1):
            psi = psi * self._potential
            psi = self._kinetic_apply(psi, self._full_kinetic)
        psi = psi * self._potential
        return self._kinetic_apply(psi, self._half_kinetic)


def make_propagator(
    grid: GridSpec,
    potential: PotentialProfile,
    config: PropagatorConfig,
    units: UnitSystem = NATURAL,
):
    v = potential.sample(grid.x())
    if config.scheme == "crank_nicolson":
        return _CrankNicolsonPropagator(grid, v, config.dt, units)
    return _SplitStepPropagator(grid, v, config.dt, units)


def step(
    state: WaveState,
    potential: PotentialProfile,
    config: PropagatorConfig,
    units: UnitSystem = NATURAL,
) -> WaveState:
    """Advance one time step.  For long runs prefer propagate, which reuses
    the prefactored operators across steps."""
    prop = make_propagator(state.grid, potential, config, units)
    psi = prop.step(state.psi.astype(complex, copy=True))
    return WaveState(grid=state.grid, psi=psi, time=state.time + config.dt)


@dataclass(frozen=True, slots=True)
class Trajectory:
    """Scalar observables recorded while propagating, plus optional field
    snapshots.  Region quantities split the domain at `split`; conditional
    means are NaN while a region is essentially empty."""

    times: np.ndarray
    norms: np.ndarray
    mean_position: np.ndarray
    mean_position_left: np.ndarray
    mean_position_right: np.ndarray
    left_probability: np.ndarray
    right_probability: np.ndarray
    split: float
    states: tuple[WaveState, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.times)


class _TrajectoryRecorder:
    def __init__(self, grid: GridSpec, split: float, dx: float):
        self.x = grid.x()
        self.w_left = _left_weights(grid, split)
        self.dx = dx
        self.split = split
        self.times: list[float] = []
        self.norms: list[float] = []
        self.mean: list[float] = []
        self.mean_l: list[float] = []
        self.mean_r: list[float] = []
        self.p_l: list[float] = []
        self.p_r: list[float] = []
        self.states: list[WaveState] = []

    def record(self, psi: np.ndarray, t: float):
        density = np.abs(psi) ** 2
        norm = float(np.sum(density)) * self.dx
        xd = self.x * density
        p_l = float(np.sum(density * self.w_left)) * self.dx
        p_r = norm - p_l
        mean = float(np.sum(xd)) * self.dx / norm
        mean_l = float(np.sum(xd * self.w_left)) * self.dx / p_l if p_l > 1e-12 else math.nan
        mean_r = (
            float(np.sum(xd * (1.0 - self.w_left))) * self.dx / p_r if p_r > 1e-12 else math.nan
        )
        self.times.append(t)
        self.norms.append(norm)
        self.mean.append(mean)
        self.mean_l.append(mean_l)
        self.mean_r.append(mean_r)
        self.p_l.append(p_l)
        self.p_r.append(p_r)

    def build(self) -> Trajectory:
        return Trajectory(
            times=np.array(self.times),
            norms=np.array(self.norms),
            mean_position=np.array(self.mean),
            mean_position_left=np.array(self.mean_l),
            mean_position_right=np.array(self.mean_r),
            left_probability=np.array(self.p_l),
            right_probability=np.array(self.p_r),
            split=self.split,
            states=tuple(self.states),
        )


def _default_split(potential: PotentialProfile) -> float:
    b = potential.boundaries
    return 0.5 * (b[0] + b[-1])


def propagate(
    state: WaveState,
    potential: PotentialProfile,
    config: PropagatorConfig,
    stop: StopCriterion,
    *,
    record_every: int = 1,
    units: UnitSystem = NATURAL,
    split: float | None = None,
    snapshot_every: int | None = None,
    snapshot_window: tuple[float, float] | None = None,
) -> tuple[WaveState, Trajectory]:
    """Propagate until the stop criterion fires, recording observables every
    record_every steps (plus the initial and final states).

    Aborts with BoundaryContactError once more than EDGE_PROBABILITY_LIMIT
    of probability sits within EDGE_CELLS cells of either grid edge, before
    wall reflection or periodic wrap-around can corrupt the interior.  This
    also bounds runs whose Separated criterion never fires.

    snapshot_every keeps every that-many-th record as a full field snapshot
    (optionally only inside the snapshot_window time interval) for
    current-based post-processing.
    """
    if record_every < 1:
        raise ConfigError(f"record_every must be >= 1, got {record_every}")
    if snapshot_every is not None and snapshot_every < 1:
        raise ConfigError(f"snapshot_every must be >= 1, got {snapshot_every}")
    grid = state.grid
    if split is None:
        split = _default_split(potential)
    prop = make_propagator(grid, potential, config, units)
    dt = config.dt
    recorder = _TrajectoryRecorder(grid, split, grid.dx)

    psi = state.psi.astype(complex, copy=True)
    t0 = state.time
    steps_done = 0
    record_index = 0

    def record_and_check(psi: np.ndarray, t: float):
        nonlocal record_index
        recorder.record(psi, t)
        density_edges = (
            float(np.sum(np.abs(psi[:EDGE_CELLS]) ** 2) + np.sum(np.abs(psi[-EDGE_CELLS:]) ** 2))
            * grid.dx
        )
        if density_edges > EDGE_PROBABILITY_LIMIT:
            raise BoundaryContactError(time=t, edge_probability=density_edges)
        if snapshot_every is not None and record_index % snapshot_every == 0:
            if snapshot_window is None or snapshot_window[0] <= t <= snapshot_window[1]:
                recorder.states.append(WaveState(grid=grid, psi=psi.copy(), time=t))
        record_index += 1

    record_and_check(psi, t0)

    if isinstance(stop, MaxTime):
        total_steps = max(1, math.ceil((stop.t - t0) / dt - 1e-9))
        central = None
    else:
        total_steps = None  # run until separation or boundary abort
        central = np.abs(grid.x() - split) < stop.window
    collided = False

    def separated() -> bool:
        nonlocal collided
        p_central = float(np.sum(np.abs(psi[central]) ** 2)) * grid.dx
        if p_central > COLLISION_THRESHOLD:
            collided = True
        if not collided or p_central >= stop.epsilon:
            return False
        if len(recorder.times) < SEPARATED_HISTORY:
            return False
        p_l = recorder.p_l[-SEPARATED_HISTORY:]
        p_r = recorder.p_r[-SEPARATED_HISTORY:]
        return (
            max(p_l) - min(p_l) <= stop.epsilon and max(p_r) - min(p_r) <= stop.epsilon
        )

    while True:
        if total_steps is not None:
            chunk = min(record_every, total_steps - steps_done)
            if chunk <= 0:
                break
        else:
            chunk = record_every
        psi = prop.advance(psi, chunk)
        steps_done += chunk
        t = t0 + steps_done * dt
        record_and_check(psi, t)
        if total_steps is None and separated():
            break

    final = WaveState(grid=grid, psi=psi, time=t0 + steps_done * dt)
    return final, recorder.build()


@dataclass(frozen=True, slots=True)
class TimingInfo:
    """Entry/exit times of the collision and the resulting window length,
    next to the plane-wave prediction width·m/(ħk0)."""

    t_enter: float
    t_exit: float
    measured: float
    analytic: float


def interaction_window(
    traj: Trajectory,
    width: float,
    k0: float,
    units: UnitSystem = NATURAL,
    threshold: float = COLLISION_THRESHOLD,
) -> TimingInfo:
    """Measure how long the collision lasted from the recorded trajectory.

    Entry is the first record where the probability beyond the split exceeds
    threshold (the leading edge has arrived).  The net current across the
    split is d/dt of that probability; exit is the last record where its
    magnitude still exceeds threshold·max (the trailing edge has passed and
    nothing is crossing any more).  A packet of width w moving at ħk0/m
    should take w·m/(ħk0).

    Raises NoCollisionError when the trajectory never reaches the split or
    stops while probability is still flowing across it.
    """
    if len(traj) < 5:
        raise NoCollisionError(f"trajectory holds {len(traj)} records; too few to time")
    if not (width > 0.0 and k0 > 0.0):
        raise ValueError(f"need positive width and carrier, got {width}, {k0}")
    p_r = traj.right_probability
    above = np.flatnonzero(p_r > threshold)
    if above.size == 0:
        raise NoCollisionError(
            f"probability beyond the split never exceeds {threshold:g}; "
            "the packet never collided within the recorded trajectory"
        )
    i_enter = int(above[0])
    flux = np.gradient(p_r, traj.times)
    flux_scale = float(np.max(np.abs(flux[i_enter:])))
    if flux_scale <= 0.0:
        raise NoCollisionError("no probability flux across the split after entry")
    crossing = np.flatnonzero(np.abs(flux) >= threshold * flux_scale)
    crossing = crossing[crossing >= i_enter]
    i_exit = int(crossing[-1])
    if i_exit >= len(traj) - 1:
        raise NoCollisionError(
            "probability is still crossing the split at the end of the trajectory; "
            "the collision did not complete"
        )
    t_enter = float(traj.times[i_enter])
    t_exit = float(traj.times[i_exit])
    analytic = width * units.mass / (units.hbar * k0)
    return TimingInfo(
        t_enter=t_enter, t_exit=t_exit, measured=t_exit - t_enter, analytic=analytic
    )


def energy_expectation(
    state: WaveState,
    potential: PotentialProfile,
    units: UnitSystem = NATURAL,
    kinetic: Literal["spectral", "stencil"] = "spectral",
) -> float:
    """⟨H⟩ = ⟨T⟩ + ⟨V⟩ for a normalised state.

    The kinetic part is evaluated either exactly in Fourier space
    ("spectral", the discrete Hamiltonian the split-step scheme evolves
    under) or with the 3-point stencil ("stencil", the one Crank-Nicolson
    conserves).  Each scheme conserves its own discrete ⟨H⟩ to solver
    roundoff; measuring one scheme with the other operator exposes an
    O(dx²) offset instead.
    """
    grid = state.grid
    psi = state.psi
    hbar, m = units.hbar, units.mass
    if kinetic == "spectral":
        k = grid.wavenumbers()
        psi_k = sfft.fft(psi)
        t_part = float(
            np.sum(hbar**2 * k**2 / (2.0 * m) * np.abs(psi_k) ** 2) * grid.dx / grid.n_points
        )
    elif kinetic == "stencil":
        lap = np.zeros_like(psi)
        lap[1:-1] = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / grid.dx**2
        lap[0] = (psi[1] - 2.0 * psi[0]) / grid.dx**2
        lap[-1] = (psi[-2] - 2.0 * psi[-1]) / grid.dx**2
        t_part = float(np.sum((np.conj(psi) * (-(hbar**2) / (2.0 * m)) * lap).real) * grid.dx)
    else:
        raise ValueError(f"kinetic must be 'spectral' or 'stencil', got {kinetic!r}")
    v = potential.sample(grid.x())
    v_part = float(np.sum(v * np.abs(psi) ** 2) * grid.dx)
    return t_part + v_part
