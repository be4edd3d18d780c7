"""Electron-gun source model.

Initial states are drawn per particle from counter-based RNG streams
keyed by (seed, particle index), so sampling is reproducible bit for
bit and independent of how particles are partitioned across workers.

Sampled distribution: transverse position uniform on the spot disc,
polar angle uniform in solid angle inside the injection cone (i.e.
uniform in cos θ over [cos θ_max, 1]), azimuth uniform, kinetic energy
Gaussian about the nominal value (spread 0 collapses it to a delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import ELECTRON_MASS, EV
from .errors import ConfigError
from .particles import ParticleState, Species

__all__ = ["BeamSpec", "speed_from_energy", "sample_beam", "sample_beam_arrays"]

_BEAM_STREAM_TAG = 0xB0
_SECONDARY_STREAM_TAG = 0x5E


def particle_rng(seed: int, index: int, tag: int = _BEAM_STREAM_TAG) -> np.random.Generator:
    """Counter-based stream for one particle (or one impact)."""
    key = np.array(
        [np.uint64(seed % 2**64), np.uint64(((tag % 2**32) << 32) | (index % 2**32))],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def secondary_rng(seed: int, parent_index: int) -> np.random.Generator:
    """Per-impact stream used for secondary emission."""
    return particle_rng(seed, parent_index, tag=_SECONDARY_STREAM_TAG)


@dataclass(frozen=True)
class BeamSpec:
    """Electron-gun beam description.

    kinetic_energy / energy_spread in eV, theta_max in radians,
    spot_radius in meters.
    """

    kinetic_energy: float = 1200.0
    energy_spread: float = 0.0
    theta_max: float = math.radians(15.0)
    spot_radius: float = 0.0005
    count: int = 10_000
    seed: int = 1

    def __post_init__(self) -> None:
        if self.kinetic_energy < 0.0:
            raise ConfigError(f"beam kinetic_energy must be >= 0 eV, got {self.kinetic_energy}")
        if self.energy_spread < 0.0:
            raise ConfigError(f"beam energy_spread must be >= 0 eV, got {self.energy_spread}")
        if not (0.0 <= self.theta_max < math.pi / 2.0):
            raise ConfigError(
                f"beam theta_max must lie in [0, pi/2), got {self.theta_max} rad"
            )
        if self.spot_radius < 0.0:
            raise ConfigError(f"beam spot_radius must be >= 0, got {self.spot_radius}")
        if self.count < 1:
            raise ConfigError(f"beam count must be >= 1, got {self.count}")


def speed_from_energy(energy_ev):
    """Non-relativistic electron speed [m/s] from kinetic energy [eV].

    v = sqrt(2 e E / m_e); accepts scalars or arrays.
    """
    energy_ev = np.asarray(energy_ev, dtype=float)
    if np.any(energy_ev < 0.0):
        raise ConfigError("kinetic energy must be >= 0 eV")
    v = np.sqrt(2.0 * energy_ev * EV / ELECTRON_MASS)
    return float(v) if v.ndim == 0 else v


def sample_beam_arrays(
    spec: BeamSpec, start: int = 0, stop: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Sample positions (N, 3) at z = 0 and velocities (N, 3).

    ``start``/``stop`` select a particle-index range; because every
    particle has its own stream, a chunked sampling is bit-identical to
    the full one.
    """
    stop = spec.count if stop is None else stop
    n = stop - start
    pos = np.zeros((n, 3))
    vel = np.zeros((n, 3))
    cos_max = math.cos(spec.theta_max)
    for i in range(n):
        rng = particle_rng(spec.seed, start + i)
        # fixed draw order: energy, spot radius, spot azimuth, cos θ, azimuth
        energy = spec.kinetic_energy
        if spec.energy_spread > 0.0:
            energy = max(0.0, energy + spec.energy_spread * rng.standard_normal())
        r = spec.spot_radius * math.sqrt(rng.uniform())
        phi = rng.uniform(0.0, 2.0 * math.pi)
        cos_t = 1.0 - rng.uniform() * (1.0 - cos_max)
        psi = rng.uniform(0.0, 2.0 * math.pi)

        v = speed_from_energy(energy)
        sin_t = math.sqrt(max(0.0, 1.0 - cos_t * cos_t))
        pos[i, 0] = r * math.cos(phi)
        pos[i, 1] = r * math.sin(phi)
        vel[i, 0] = v * sin_t * math.cos(psi)
        vel[i, 1] = v * sin_t * math.sin(psi)
        vel[i, 2] = v * cos_t
    return pos, vel


def sample_beam(spec: BeamSpec) -> list[ParticleState]:
    """Sample ``spec.count`` primary states at the source plane z = 0."""
    pos, vel = sample_beam_arrays(spec)
    return [
        ParticleState(pos[i], vel[i], Species.PRIMARY) for i in range(spec.count)
    ]
