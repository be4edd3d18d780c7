"""Particle records: state, species, terminal status, trajectories."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import SPEED_OF_LIGHT

__all__ = ["Species", "Status", "ParticleState", "Trajectory"]


class Species(enum.Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"


class Status(enum.IntEnum):
    """Terminal status of a particle. Transitions are monotone:
    IN_FLIGHT -> one terminal value, never back."""

    IN_FLIGHT = 0
    ABSORBED_TOROID = 1
    ABSORBED_WIRE = 2
    COLLECTED_PLATE = 3
    LOST_WALL = 4
    LOST_TIMEOUT = 5
    REFLECTED_SOURCE = 6

    @property
    def terminal(self) -> bool:
        return self is not Status.IN_FLIGHT


@dataclass(frozen=True)
class ParticleState:
    """Position [m], velocity [m/s], species and status of one particle."""

    position: np.ndarray
    velocity: np.ndarray
    species: Species = Species.PRIMARY
    status: Status = Status.IN_FLIGHT

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "position", np.asarray(self.position, dtype=float).reshape(3)
        )
        object.__setattr__(
            self, "velocity", np.asarray(self.velocity, dtype=float).reshape(3)
        )
        speed = float(np.linalg.norm(self.velocity))
        if speed >= SPEED_OF_LIGHT:
            raise ValueError(f"superluminal particle state (|v| = {speed:.3e} m/s)")
        if speed > 0.1 * SPEED_OF_LIGHT:
            warnings.warn(
                f"|v| = {speed:.3e} m/s exceeds 0.1c; non-relativistic model "
                "is inaccurate",
                stacklevel=2,
            )

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))

    @property
    def v_parallel(self) -> float:
        """Axial velocity component [m/s]."""
        return float(self.velocity[2])

    @property
    def v_perp(self) -> float:
        """Transverse speed [m/s]."""
        return float(np.hypot(self.velocity[0], self.velocity[1]))

    def with_status(self, status: Status) -> "ParticleState":
        if self.status.terminal and status != self.status:
            raise ValueError("terminal particle status cannot change")
        return ParticleState(self.position, self.velocity, self.species, status)


@dataclass(frozen=True)
class Trajectory:
    """Sampled single-particle trajectory.

    ``times`` are strictly increasing; samples are taken every fixed
    time stride, plus the terminal point. ``min_z``/``max_z`` track the
    step-resolved axial extremes (finer than the sample stride), which
    is how retarding-potential turnaround is verified.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    status: Status
    flight_time: float
    min_z: float
    max_z: float
    species: Species = Species.PRIMARY
    events: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0.0):
            raise ValueError("trajectory samples must be strictly increasing in time")

    @property
    def final_state(self) -> ParticleState:
        return ParticleState(
            self.positions[-1], self.velocities[-1], self.species, self.status
        )

    def to_csv_rows(self):
        """Rows (t, x, y, z, vx, vy, vz) for the trajectory dump."""
        for t, p, v in zip(self.times, self.positions, self.velocities):
            yield (t, p[0], p[1], p[2], v[0], v[1], v[2])
