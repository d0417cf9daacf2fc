"""1-D quantum scattering laboratory.

Analytic reflection/transmission probabilities for piecewise-constant
potentials, cross-checked by propagating wide wave packets under the
time-dependent Schrödinger equation and measuring the scattered pieces.
"""
from .config import (
    RunConfig,
    default_config,
    default_study_config,
    load_config,
    parse_config,
    save_config,
    serialize_config,
)
from .errors import (
    BoundaryContactError,
    ConfigError,
    NoCollisionError,
    PhysicsError,
    PlateauNotFoundError,
    StepScatterError,
)
from .evolve import (
    MaxTime,
    PropagatorConfig,
    Separated,
    StopCriterion,
    TimingInfo,
    Trajectory,
    energy_expectation,
    interaction_window,
    make_propagator,
    propagate,
    recommended_dt,
    step,
)
from .harness import (
    CSV_HEADERS,
    EnergyRatio,
    PacketWidth,
    SweepSpec,
    Table,
    analytic_probabilities,
    analytic_table,
    convergence_row_config,
    convergence_study,
    emit,
    read_table,
    result_table,
    run,
    run_detailed,
    sweep,
)
from .measure import (
    CurrentSample,
    ScatteringResult,
    current_based_rt,
    group_velocity_fit,
    packet_width,
    probability_current,
    region_probabilities,
)
from .packet import (
    FlatTop,
    Gaussian,
    GridSpec,
    MomentumSpectrum,
    NarrowbandReport,
    PacketSpec,
    WaveState,
    build_packet,
    effective_width,
    momentum_spectrum,
    require_narrowband,
)
from .stationary import (
    NATURAL,
    PiecewiseConstantPotential,
    PotentialProfile,
    ProbabilityPair,
    ScatteringAmplitudes,
    StepPotential,
    UnitSystem,
    reflection_probability,
    scattering_probabilities,
    step_amplitudes,
    transfer_matrix_amplitudes,
    transmission_probability,
    wavenumbers,
)

__version__ = "0.1.0"
