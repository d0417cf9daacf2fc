"""Shared fixtures: two small scattering runs reused across test modules.

Both send the same Gaussian packet at a potential step with E = 2 v0
(k0 = 5, v0 = 6.25), once per scheme.  Session scope keeps the cost to a
single propagation each; tests must not mutate the returned objects.
"""
import pytest

from stepscatter import (
    Gaussian,
    GridSpec,
    MaxTime,
    PacketSpec,
    PropagatorConfig,
    Separated,
    StepPotential,
    build_packet,
    propagate,
)

K0 = 5.0
V0 = 6.25  # E = k0^2/2 = 2 v0 in natural units
STEP = StepPotential(v0=V0)

# One human-readable verdict line per acceptance criterion, echoed after the
# run summary so they are visible without -s.
ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance_report():
    def record(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

GRID = GridSpec(-100.0, 100.0, 8192)
PACKET = PacketSpec(shape=Gaussian(sigma=2.5), center=-25.0, width=15.0, k0=K0)


@pytest.fixture(scope="session")
def cn_scatter():
    """Crank-Nicolson run stopped by packet separation, with snapshots."""
    state = build_packet(PACKET, GRID)
    final, traj = propagate(
        state,
        STEP,
        PropagatorConfig("crank_nicolson", 2e-3),
        Separated(window=8.0, epsilon=1e-5),
        record_every=25,
        snapshot_every=2,
    )
    return final, traj


@pytest.fixture(scope="session")
def split_scatter():
    """Split-step run over the same step, stopped at a fixed time."""
    state = build_packet(PACKET, GRID)
    final, traj = propagate(
        state,
        STEP,
        PropagatorConfig("split_step", 5e-4),
        MaxTime(9.0),
        record_every=100,
    )
    return final, traj
