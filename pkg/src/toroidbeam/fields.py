"""Analytic electromagnetic field models for the transport chamber.

The chamber field is a superposition of independent contributions:

* a uniform axial guide field ``B0 ẑ`` from external coils,
* the distortion of that guide field by the high-permeability toroid
  core (an axial dip of up to ~25% plus the radial component required
  by ``∇·B = 0``),
* a small transverse leakage field from an imperfect toroid winding,
  proportional to the winding current,
* the axial electrostatic potential profile of the electrodes (source,
  grid, plate), giving ``E = -dV/dz ẑ``.

The magnetic flux confined inside the toroid core is tracked as data
(it scales linearly with the winding current) but contributes no field
outside the core and therefore no force on the beam — that is the
classical null hypothesis this simulator quantifies.

All evaluation is pure and vectorized: ``evaluate_many`` maps an
``(N, 3)`` array of positions to ``(E, B)`` arrays of the same shape.
Field objects are frozen dataclasses, safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "FieldContribution",
    "UniformAxialField",
    "ToroidFieldParams",
    "ToroidField",
    "PotentialProfile",
    "ElectrodeField",
    "FieldStack",
    "uniform_axial_field",
    "toroid_contribution",
    "electrode_field",
]


class FieldContribution:
    """Base class for one term of the field superposition."""

    def evaluate_many(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(E, B)`` arrays of shape ``(N, 3)`` at ``points``."""
        raise NotImplementedError


@dataclass(frozen=True)
class UniformAxialField(FieldContribution):
    """Uniform magnetic guide field ``B = (0, 0, b0)``, no electric field.

    Parameters
    ----------
    b0 : float
        Axial flux density [T]. Must be positive.
    """

    b0: float

    def __post_init__(self) -> None:
        if not self.b0 > 0.0:
            raise ConfigError(f"uniform axial field requires b0 > 0, got {self.b0}")

    def evaluate_many(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = points.shape[0]
        e = np.zeros((n, 3))
        b = np.zeros((n, 3))
        b[:, 2] = self.b0
        return e, b


@dataclass(frozen=True)
class ToroidFieldParams:
    """Parameters of the toroid's external field signature.

    Parameters
    ----------
    z_center : float
        Axial position of the toroid plane [m].
    core_perturbation_amplitude : float
        Peak fractional dip of the guide field at the core plane
        (dimensionless, ``|a| <= 1``; ~0.25 for a high-permeability core).
    perturbation_width : float
        Axial scale of the dip [m] (of order the core minor radius).
    leakage_coefficient : float
        Dimensionless winding-leakage fraction ``eps >= 0``; 0 means a
        perfectly wound toroid.
    toroid_current : float
        Winding current [A].
    core_field_per_ampere : float
        Ideal field inside the core per ampere of winding current [T/A].
    core_area : float
        Core cross-section [m^2]; used only for flux bookkeeping.
    leakage_azimuth : float
        Azimuth of the (fixed) transverse leakage direction [rad];
        0 points along +x.
    """

    z_center: float
    core_perturbation_amplitude: float = 0.25
    perturbation_width: float = 0.01
    leakage_coefficient: float = 0.0
    toroid_current: float = 0.0
    core_field_per_ampere: float = 1.0e-2
    core_area: float = 7.85e-5
    leakage_azimuth: float = math.pi / 2.0

    def __post_init__(self) -> None:
        if abs(self.core_perturbation_amplitude) > 1.0:
            raise ConfigError(
                "toroid core_perturbation_amplitude must satisfy |a| <= 1, "
                f"got {self.core_perturbation_amplitude}"
            )
        if self.leakage_coefficient < 0.0:
            raise ConfigError(
                f"toroid leakage_coefficient must be >= 0, got {self.leakage_coefficient}"
            )
        if not self.perturbation_width > 0.0:
            raise ConfigError(
                f"toroid perturbation_width must be > 0, got {self.perturbation_width}"
            )

    @property
    def core_field(self) -> float:
        """Ideal confined field in the core [T] at the set current."""
        return self.core_field_per_ampere * self.toroid_current

    @property
    def flux(self) -> float:
        """Confined magnetic flux [Wb]; linear in the winding current.

        Bookkeeping only: the confined flux exerts no force on the beam.
        """
        return self.core_field * self.core_area


@dataclass(frozen=True)
class ToroidField(FieldContribution):
    """External magnetic signature of the toroid: core dip plus leakage.

    The axial dip is ``δB_z = -a · b0 · g(u)`` with ``g(u) = exp(-u²/2)``
    and ``u = (z - z_c)/w``. The radial component follows from the
    axisymmetric vector potential ``A_φ = (ρ/2)(b0 - a·b0·g)``, which
    makes the total field exactly divergence-free:
    ``B_ρ = (ρ/2)·a·b0·g'(u)/w``.

    Leakage is a transverse field of magnitude
    ``eps · core_field(I) · exp(-(z - z_c)²/2w²)`` along a fixed
    transverse unit vector; it is exactly linear in ``eps · I``.
    """

    params: ToroidFieldParams
    b0: float

    def evaluate_many(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p = self.params
        n = points.shape[0]
        e = np.zeros((n, 3))
        b = np.zeros((n, 3))

        u = (points[:, 2] - p.z_center) / p.perturbation_width
        g = np.exp(-0.5 * u * u)
        a_b0 = p.core_perturbation_amplitude * self.b0

        # core dip and its div-free radial partner
        b[:, 2] = -a_b0 * g
        gprime_over_w = -u * g / p.perturbation_width
        radial_factor = 0.5 * a_b0 * gprime_over_w
        b[:, 0] += radial_factor * points[:, 0]
        b[:, 1] += radial_factor * points[:, 1]

        # winding leakage, same axial envelope as the dip
        leak = p.leakage_coefficient * p.core_field
        if leak != 0.0:
            b[:, 0] += leak * math.cos(p.leakage_azimuth) * g
            b[:, 1] += leak * math.sin(p.leakage_azimuth) * g
        return e, b


@dataclass(frozen=True)
class PotentialProfile:
    """Piecewise-linear axial potential ``V(z)`` with continuous ramps.

    Defined by strictly increasing breakpoints ``(z_i, V_i)``; the
    potential is constant before the first and after the last node, so
    ``E_z = -dV/dz`` is bounded everywhere.
    """

    nodes_z: tuple[float, ...]
    nodes_v: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.nodes_z) != len(self.nodes_v):
            raise ConfigError("potential profile nodes_z and nodes_v length mismatch")
        if len(self.nodes_z) < 1:
            raise ConfigError("potential profile needs at least one node")
        dz = np.diff(self.nodes_z)
        if np.any(dz <= 0.0):
            raise ConfigError(
                "potential profile breakpoints must be strictly increasing "
                "(overlapping ramps?)"
            )

    def voltage(self, z: np.ndarray | float) -> np.ndarray | float:
        return np.interp(
            z, self.nodes_z, self.nodes_v,
            left=self.nodes_v[0], right=self.nodes_v[-1],
        )

    def e_z(self, z: np.ndarray | float) -> np.ndarray:
        """Axial electric field ``-dV/dz`` [V/m]; zero outside the nodes."""
        zq = np.atleast_1d(np.asarray(z, dtype=float))
        nz = np.asarray(self.nodes_z)
        nv = np.asarray(self.nodes_v)
        out = np.zeros_like(zq)
        if len(nz) > 1:
            slopes = np.diff(nv) / np.diff(nz)
            idx = np.searchsorted(nz, zq, side="right") - 1
            inside = (idx >= 0) & (idx < len(slopes))
            out[inside] = -slopes[idx[inside]]
        return out

    @staticmethod
    def combine(profiles: list["PotentialProfile"]) -> "PotentialProfile":
        """Sum several profiles on the union of their breakpoints."""
        if not profiles:
            return PotentialProfile((0.0,), (0.0,))
        zs = np.unique(np.concatenate([np.asarray(p.nodes_z) for p in profiles]))
        vs = np.zeros_like(zs)
        for p in profiles:
            vs += np.asarray(p.voltage(zs))
        return PotentialProfile(tuple(zs.tolist()), tuple(vs.tolist()))


def axial_potential_profile(
    source_potential: float,
    source_ramp: float,
    grid_z: float,
    grid_bias: float,
    grid_ramp: float,
    plate_z: float,
    plate_potential: float = 0.0,
) -> PotentialProfile:
    """Build the chamber potential profile from electrode values.

    Layout along z: source electrode surface at 0 held at
    ``source_potential`` (large negative), a linear acceleration ramp up
    to the drift potential (0 V) over ``source_ramp``, a field-free
    drift, symmetric ramps of length ``grid_ramp`` down to ``grid_bias``
    at the grid plane ``grid_z`` and back up to ``plate_potential``, and
    the plate at ``plate_z``.
    """
    if source_ramp <= 0.0 or grid_ramp <= 0.0:
        raise ConfigError("potential ramp lengths must be positive")
    if source_ramp >= grid_z - grid_ramp:
        raise ConfigError(
            "overlapping ramps: source ramp reaches into the grid ramp "
            f"(source_ramp={source_ramp}, grid_z={grid_z}, grid_ramp={grid_ramp})"
        )
    if grid_z + grid_ramp > plate_z:
        raise ConfigError(
            "overlapping ramps: grid exit ramp extends past the plate "
            f"(grid_z={grid_z}, grid_ramp={grid_ramp}, plate_z={plate_z})"
        )
    nodes = [
        (0.0, source_potential),
        (source_ramp, 0.0),
        (grid_z - grid_ramp, 0.0),
        (grid_z, grid_bias),
        (grid_z + grid_ramp, plate_potential),
        (plate_z, plate_potential),
    ]
    # drop duplicate breakpoints (e.g. grid exit ramp ending at the plate)
    zs, vs = [], []
    for z, v in nodes:
        if zs and z == zs[-1]:
            continue
        zs.append(z)
        vs.append(v)
    return PotentialProfile(tuple(zs), tuple(vs))


@dataclass(frozen=True)
class ElectrodeField(FieldContribution):
    """Electrostatic contribution of the electrode stack: ``E = -dV/dz ẑ``."""

    profile: PotentialProfile

    def evaluate_many(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = points.shape[0]
        e = np.zeros((n, 3))
        b = np.zeros((n, 3))
        e[:, 2] = self.profile.e_z(points[:, 2])
        return e, b


@dataclass(frozen=True)
class FieldStack:
    """Ordered, immutable superposition of field contributions.

    Evaluation is pure (same point, same result, bit for bit) and the
    total field is the component-wise sum over contributions.
    """

    contributions: tuple[FieldContribution, ...] = field(default_factory=tuple)

    def evaluate(self, point) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(E, B)`` 3-vectors at a single position."""
        pts = np.asarray(point, dtype=float).reshape(1, 3)
        e, b = self.evaluate_many(pts)
        return e[0], b[0]

    def evaluate_many(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(points, dtype=float)
        e = np.zeros_like(pts)
        b = np.zeros_like(pts)
        for contrib in self.contributions:
            ce, cb = contrib.evaluate_many(pts)
            e += ce
            b += cb
        return e, b

    def b_many(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate_many(points)[1]

    def axial_profile(self) -> PotentialProfile | None:
        """Merged axial potential of all electrode contributions, if any.

        In this artifact every electric contribution is an axial
        electrode profile, so this captures the complete E field.
        """
        profiles = [
            c.profile for c in self.contributions if isinstance(c, ElectrodeField)
        ]
        if not profiles:
            return None
        if len(profiles) == 1:
            return profiles[0]
        return PotentialProfile.combine(profiles)

    def reference_axial_b0(self) -> float:
        """Summed guide-field strength [T], used for time-step sizing."""
        return sum(
            c.b0 for c in self.contributions if isinstance(c, UniformAxialField)
        )


def uniform_axial_field(b0: float) -> UniformAxialField:
    """Uniform axial guide field contribution; ``b0`` in tesla, > 0."""
    return UniformAxialField(b0=b0)


def toroid_contribution(params: ToroidFieldParams, b0: float) -> ToroidField:
    """Toroid field contribution (core dip + leakage) referenced to ``b0``."""
    return ToroidField(params=params, b0=b0)


def electrode_field(profile: PotentialProfile) -> ElectrodeField:
    """Electrode contribution from an axial potential profile."""
    return ElectrodeField(profile=profile)
