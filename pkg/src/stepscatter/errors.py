"""Exception hierarchy used across the package.

ConfigError marks unusable run descriptions, PhysicsError marks runs whose
output cannot be trusted (the two map to distinct CLI exit codes).
"""
from __future__ import annotations


class StepScatterError(Exception):
    """Base class for all package errors."""


class ConfigError(StepScatterError):
    """A run configuration is inconsistent or cannot be parsed."""


class PhysicsError(StepScatterError):
    """A simulation or measurement produced physically unusable output."""


class BoundaryContactError(PhysicsError):
    """Probability reached the edge of the grid; results would be corrupted."""

    def __init__(self, time: float, edge_probability: float):
        self.time = time
        self.edge_probability = edge_probability
        super().__init__(
            f"probability {edge_probability:.3e} within 5 grid cells of the domain "
            f"edge at t = {time:g}; enlarge the grid or stop earlier"
        )


class NoCollisionError(PhysicsError):
    """The recorded trajectory does not contain a completed collision."""


class PlateauNotFoundError(PhysicsError):
    """No steady incident-current plateau could be identified in the samples."""
