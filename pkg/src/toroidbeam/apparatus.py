"""Chamber geometry and surface interactions.

Surfaces along the beam line: the toroid plane (annular blocker with a
circular aperture), the grid plane (parallel cylindrical wires), the
plate (collects every arrival) and the chamber wall. Grid-wire impacts
emit low-energy secondary electrons back toward the source; those are
the particles that shuttle between the grid bias and the source
potential before finally crossing to the plate.

All checks are pure functions of state + geometry. Secondary emission
draws from a caller-supplied RNG stream (one stream per impact keeps
results independent of evaluation order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import ELECTRON_MASS, EV
from .errors import ConfigError
from .fields import PotentialProfile, ToroidFieldParams, axial_potential_profile
from .particles import ParticleState, Species, Status

__all__ = [
    "Apparatus",
    "SecondaryYieldParams",
    "toroid_aperture_check",
    "grid_interaction",
    "secondary_emission",
]


@dataclass(frozen=True)
class Apparatus:
    """Full transport-line geometry and electrode potentials.

    ``source_to_grid`` is the distance L from the source electrode plane
    (z = 0) to the grid plane. The toroid sits between source and grid;
    its aperture may be offset transversely (along x) to model
    misalignment. The plate sits ``grid_plate_gap`` behind the grid.
    """

    source_to_grid: float = 0.27
    grid_plate_gap: float = 0.015
    toroid_z: float = 0.135
    toroid_inner_diameter: float = 0.026
    toroid_offset: float = 0.0
    toroid_params: ToroidFieldParams | None = None
    grid_pitch: float = 0.001
    wire_radius: float = 0.0001
    grid_orientation: str = "x"
    chamber_radius: float = 0.05
    source_potential: float = -1200.0
    source_ramp: float = 0.01
    grid_bias: float = -5.0
    grid_ramp: float = 0.002
    plate_potential: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.toroid_z < self.source_to_grid):
            raise ConfigError(
                "geometry requires 0 < toroid_z < source_to_grid, got "
                f"toroid_z={self.toroid_z}, source_to_grid={self.source_to_grid}"
            )
        if not self.grid_plate_gap > 0.0:
            raise ConfigError(f"grid_plate_gap must be > 0, got {self.grid_plate_gap}")
        if not self.grid_pitch > 2.0 * self.wire_radius:
            raise ConfigError(
                "grid_pitch must exceed twice wire_radius, got "
                f"pitch={self.grid_pitch}, wire_radius={self.wire_radius}"
            )
        if self.wire_radius < 0.0:
            raise ConfigError(f"wire_radius must be >= 0, got {self.wire_radius}")
        if self.grid_orientation not in ("x", "y"):
            raise ConfigError(
                f"grid_orientation must be 'x' or 'y', got {self.grid_orientation!r}"
            )
        if not self.chamber_radius > self.toroid_inner_diameter / 2.0:
            raise ConfigError("chamber_radius must exceed the toroid inner radius")

    @property
    def grid_z(self) -> float:
        return self.source_to_grid

    @property
    def plate_z(self) -> float:
        return self.source_to_grid + self.grid_plate_gap

    @property
    def toroid_inner_radius(self) -> float:
        return self.toroid_inner_diameter / 2.0

    @property
    def toroid_outer_radius(self) -> float:
        """Outer radius of the torus body (inner radius + core diameter)."""
        if self.toroid_params is not None:
            r_minor = math.sqrt(self.toroid_params.core_area / math.pi)
        else:
            r_minor = 0.005
        return self.toroid_inner_radius + 2.0 * r_minor

    def potential_profile(self) -> PotentialProfile:
        return axial_potential_profile(
            source_potential=self.source_potential,
            source_ramp=self.source_ramp,
            grid_z=self.grid_z,
            grid_bias=self.grid_bias,
            grid_ramp=self.grid_ramp,
            plate_z=self.plate_z,
            plate_potential=self.plate_potential,
        )

    # --- vectorized geometry checks used by the propagation engine ---

    def toroid_blocked(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """True where a particle at the toroid plane hits the torus body."""
        dx = x - self.toroid_offset
        return dx * dx + y * y >= self.toroid_inner_radius**2

    def wire_hit(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """True where a particle at the grid plane lands on a wire.

        Wires run along the orientation axis with centers at integer
        multiples of the pitch in the perpendicular coordinate.
        """
        coord = y if self.grid_orientation == "x" else x
        folded = np.abs(
            np.mod(coord + 0.5 * self.grid_pitch, self.grid_pitch)
            - 0.5 * self.grid_pitch
        )
        return folded <= self.wire_radius


@dataclass(frozen=True)
class SecondaryYieldParams:
    """Secondary-electron emission model: constant mean yield per impact,
    exponential emission energies, cosine-law directions."""

    yield_0: float = 1.0
    emission_energy_mean: float = 3.0  # eV

    def __post_init__(self) -> None:
        if self.yield_0 < 0.0:
            raise ConfigError(f"secondary yield_0 must be >= 0, got {self.yield_0}")
        if not self.emission_energy_mean > 0.0:
            raise ConfigError(
                f"secondary emission_energy_mean must be > 0, "
                f"got {self.emission_energy_mean}"
            )


def toroid_aperture_check(state: ParticleState, apparatus: Apparatus) -> ParticleState:
    """Apply the toroid aperture test to a particle at the toroid plane.

    Returns the state unchanged if it passes through the aperture, or
    terminated with ``ABSORBED_TOROID`` if it lands on the torus body.
    """
    blocked = apparatus.toroid_blocked(
        np.asarray(state.position[0]), np.asarray(state.position[1])
    )
    if bool(blocked):
        return state.with_status(Status.ABSORBED_TOROID)
    return state


def grid_interaction(state: ParticleState, apparatus: Apparatus) -> ParticleState:
    """Apply the grid-wire test to a particle at the grid plane.

    Absorption is purely geometric (perpendicular distance to the
    nearest wire axis at most the wire radius). Retarding-potential
    reflection is not decided here; it emerges from propagation through
    the electrode field.
    """
    hit = apparatus.wire_hit(
        np.asarray(state.position[0]), np.asarray(state.position[1])
    )
    if bool(hit):
        return state.with_status(Status.ABSORBED_WIRE)
    return state


def sample_emission(
    rng: np.random.Generator,
    count: int,
    params: SecondaryYieldParams,
    normal: np.ndarray,
) -> np.ndarray:
    """Draw ``count`` emission velocities [m/s] about the surface normal.

    Energies are exponential with the configured mean; directions follow
    the cosine law about ``normal`` so every velocity satisfies
    ``v · normal > 0``.
    """
    normal = np.asarray(normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    energies_ev = rng.exponential(params.emission_energy_mean, size=count)
    speeds = np.sqrt(2.0 * energies_ev * EV / ELECTRON_MASS)
    cos_alpha = np.sqrt(rng.uniform(size=count))  # cosine law
    sin_alpha = np.sqrt(1.0 - cos_alpha**2)
    beta = rng.uniform(0.0, 2.0 * math.pi, size=count)

    # orthonormal frame (t1, t2, normal)
    ref = np.array([1.0, 0.0, 0.0])
    if abs(normal[0]) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    t1 = np.cross(normal, ref)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)

    dirs = (
        np.outer(sin_alpha * np.cos(beta), t1)
        + np.outer(sin_alpha * np.sin(beta), t2)
        + np.outer(cos_alpha, normal)
    )
    return dirs * speeds[:, None]


def secondary_emission(
    impact: ParticleState,
    surface_normal: np.ndarray,
    params: SecondaryYieldParams,
    rng: np.random.Generator,
) -> list[ParticleState]:
    """Emit secondaries from an impact point on a grid wire or the plate.

    The number of secondaries is Poisson with mean ``yield_0``; each is
    launched from the impact position into the vacuum side of the
    surface. Emitted particles are tagged ``Species.SECONDARY``.
    """
    if not impact.status.terminal:
        raise ValueError("secondary emission requires a terminated impact state")
    n = int(rng.poisson(params.yield_0))
    if n == 0:
        return []
    velocities = sample_emission(rng, n, params, surface_normal)
    return [
        ParticleState(impact.position.copy(), v, Species.SECONDARY, Status.IN_FLIGHT)
        for v in velocities
    ]
