"""Closed-form paraxial beam optics and the wave-interpretation audit.

The central identity: the "wavelength" attributed to a macroscopic
matter wave in this geometry, λ = 2π v_par / Ω, is term for term the
classical focusing distance l_f = 2π v_par / Ω of a beam with small
angular spread in a uniform axial field. Everything the detector sees
at that scale is therefore explained by magnetic refocusing, aperture
clipping, field-profile sensitivity and secondary-electron shuttling.

``consistency_report`` assembles the quantitative audit: wavelength vs
grid-plate gap (no room for a standing amplitude), wavelength vs grid
pitch (a wave that long sees the grid as an opaque plate), the fringe
shift a genuine flux-dependent phase could re-compensate (contradicted
by the observed washout under a few-percent field detuning), beam
diameter vs toroid clearance (clipping plausibility), and path
topology (every classical path threads the toroid hole: the region is
simply connected, so no Aharonov-Bohm geometry exists).

All functions are stateless, SI-based (Ω = eB/m) and accept scalars or
arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .apparatus import Apparatus
from .beam import speed_from_energy
from .constants import ELECTRON_MASS, ELEM_CHARGE, EV, PLANCK, SPEED_OF_LIGHT

__all__ = [
    "cyclotron_frequency",
    "focal_length",
    "macro_wavelength",
    "interference_order",
    "larmor_radius",
    "injection_larmor_radius",
    "de_broglie_wavelength",
    "fringe_shift",
    "BeamFieldPoint",
    "ConsistencyReport",
    "consistency_report",
]

_TWO_PI = 2.0 * math.pi


def cyclotron_frequency(b: float | np.ndarray):
    """Electron cyclotron (Larmor) angular frequency Ω = eB/m [rad/s]."""
    return ELEM_CHARGE * np.asarray(b, dtype=float) / ELECTRON_MASS


def focal_length(v_par, b):
    """Refocusing distance l_f = 2π v_par / Ω [m].

    Axial distance travelled during one gyration period; a beam with a
    small angular spread converges back to a point image every l_f.
    """
    return _TWO_PI * np.asarray(v_par, dtype=float) / cyclotron_frequency(b)


def macro_wavelength(v_par, b):
    """The claimed macroscopic "wavelength" λ = 2π v_par / Ω [m].

    Identical, symbol for symbol, to :func:`focal_length`; it is kept
    as a separate named operation precisely because that identity is
    the crux of the classical explanation.
    """
    return _TWO_PI * np.asarray(v_par, dtype=float) / cyclotron_frequency(b)


def interference_order(length, v_bar, b):
    """Real-valued order l = Ω L / (2π v̄) = L / l_f.

    Integer values mark the focus-on-detector resonance; l = 1 puts the
    first focus exactly on the grid.
    """
    return np.asarray(length, dtype=float) / focal_length(v_bar, b)


def larmor_radius(v_perp, b):
    """Gyroradius r_L = v_perp / Ω [m]."""
    return np.asarray(v_perp, dtype=float) / cyclotron_frequency(b)


def injection_larmor_radius(v, theta_i, b):
    """Gyroradius of a beam injected at angle θ_i, and 2 r_L.

    r_L ≈ v_par sin θ_i / Ω = l_f(v cos θ_i) sin θ_i / 2π. Returns
    ``(r_L, beam_diameter)`` where the beam diameter is the gyro-circle
    diameter 2 r_L (the maximum transverse excursion from the launch
    point).
    """
    theta_i = np.asarray(theta_i, dtype=float)
    if np.any(theta_i < 0.0) or np.any(theta_i >= math.pi / 2.0):
        raise ValueError("injection angle must lie in [0, pi/2)")
    r_l = focal_length(np.asarray(v, dtype=float) * np.cos(theta_i), b) * np.sin(
        theta_i
    ) / _TWO_PI
    return r_l, 2.0 * r_l


def de_broglie_wavelength(energy_ev):
    """Electron de Broglie wavelength λ = h / sqrt(2 m e E) [m]."""
    energy_ev = np.asarray(energy_ev, dtype=float)
    if np.any(energy_ev <= 0.0):
        raise ValueError("energy must be > 0 eV")
    return PLANCK / np.sqrt(2.0 * ELECTRON_MASS * EV * energy_ev)


def fringe_shift(delta_b_over_b, length):
    """Pattern displacement |δB/B| · L [m] implied by δλ/λ = -δB/B.

    The signed value is returned alongside implicitly: the shift keeps
    the sign of the detuning through the returned product.
    """
    delta = np.asarray(delta_b_over_b, dtype=float)
    if np.any(np.abs(delta) >= 1.0):
        raise ValueError("|delta_B/B| must be < 1")
    return delta * np.asarray(length, dtype=float)


@dataclass(frozen=True)
class BeamFieldPoint:
    """One operating point: beam energy [eV], guide field [T],
    source-to-grid distance [m], max injection angle [rad]."""

    energy_ev: float
    b0: float
    length: float
    theta_i_max: float = math.radians(15.0)

    def __post_init__(self) -> None:
        if self.energy_ev <= 0.0 or self.b0 <= 0.0 or self.length <= 0.0:
            raise ValueError("BeamFieldPoint requires positive energy, field, length")


@dataclass(frozen=True)
class ConsistencyReport:
    """Quantified audit of the wave interpretation at one operating point."""

    l_f: float
    lambda_macro: float
    lambda_de_broglie: float
    ratio_lambda_to_gap: float
    ratio_lambda_to_pitch: float
    interference_order_l: float
    fringe_shift_at_5pct: float
    r_l_max: float
    beam_diameter: float
    toroid_clearance: float
    simply_connected: bool
    cos_theta_correction: float
    relativistic_gamma_minus_1: float
    verdict_lines: tuple[str, ...] = field(default_factory=tuple)

    def to_text(self) -> str:
        rows = self.to_rows()
        width = max(len(k) for k, _ in rows)
        lines = ["consistency report", "-" * 19]
        lines += [f"{k.ljust(width)}  {v}" for k, v in rows]
        lines.append("")
        lines.extend(f"* {line}" for line in self.verdict_lines)
        return "\n".join(lines)

    def to_rows(self) -> list[tuple[str, str]]:
        return [
            ("focal_length_m", repr(self.l_f)),
            ("macro_wavelength_m", repr(self.lambda_macro)),
            ("de_broglie_wavelength_m", repr(self.lambda_de_broglie)),
            ("ratio_lambda_to_gap", repr(self.ratio_lambda_to_gap)),
            ("ratio_lambda_to_pitch", repr(self.ratio_lambda_to_pitch)),
            ("interference_order", repr(self.interference_order_l)),
            ("fringe_shift_at_5pct_m", repr(self.fringe_shift_at_5pct)),
            ("larmor_radius_max_m", repr(self.r_l_max)),
            ("beam_diameter_m", repr(self.beam_diameter)),
            ("toroid_clearance_m", repr(self.toroid_clearance)),
            ("simply_connected", str(self.simply_connected).lower()),
            ("cos_theta_correction", repr(self.cos_theta_correction)),
            ("relativistic_gamma_minus_1", repr(self.relativistic_gamma_minus_1)),
        ]


def consistency_report(point: BeamFieldPoint, apparatus: Apparatus) -> ConsistencyReport:
    """Fill every audit quantity and the verdict lines for one setup."""
    v = speed_from_energy(point.energy_ev)
    l_f = float(focal_length(v, point.b0))
    lam = float(macro_wavelength(v, point.b0))
    lam_db = float(de_broglie_wavelength(point.energy_ev))
    gap = apparatus.grid_plate_gap
    pitch = apparatus.grid_pitch
    order = float(interference_order(point.length, v, point.b0))
    shift5 = float(fringe_shift(0.05, point.length))
    r_l, diameter = injection_larmor_radius(v, point.theta_i_max, point.b0)
    r_l = float(r_l)
    diameter = float(diameter)

    # clearance compares beam diameter to aperture diameter (both reduced
    # by any transverse misalignment); the envelope about the axis decides
    # whether any path could pass outside the torus body
    clearance = (
        apparatus.toroid_inner_diameter - diameter - 2.0 * abs(apparatus.toroid_offset)
    )
    envelope_radius = diameter + abs(apparatus.toroid_offset)
    simply_connected = envelope_radius < apparatus.toroid_outer_radius

    cos_corr = 1.0 - math.cos(point.theta_i_max)
    gamma_m1 = point.energy_ev * EV / (ELECTRON_MASS * SPEED_OF_LIGHT**2)

    lines = (
        f"lambda_macro = focal_length exactly ({lam:.4g} m): the claimed "
        "wavelength is the classical refocusing distance, not a matter-wave scale",
        f"lambda/gap = {lam / gap:.1f}: no appreciable standing amplitude fits "
        f"between grid and plate (gap {gap:.3g} m)",
        f"lambda/pitch = {lam / pitch:.0f}: to a wave this long the "
        f"{pitch:.3g} m grid is an opaque plate, so the claimed transmitted "
        "amplitude is inconsistent",
        f"a genuine flux phase would re-shift the pattern by "
        f"{shift5 * 100:.2f} cm under a 5% field change instead of washing it "
        "out, contradicting the reported disappearance",
        f"beam diameter {diameter * 100:.2f} cm vs toroid clearance "
        f"{clearance * 100:.2f} cm: misalignment of millimeters makes the "
        "toroid clip the beam",
        "all classical paths pass through the toroid aperture: the path "
        "region is simply connected, so the flux-encircling topology of an "
        "Aharonov-Bohm setup is absent"
        if simply_connected
        else "beam envelope exceeds the torus body: path topology must be "
        "checked explicitly",
        f"v_par = v cos(theta) correction at theta_max: {cos_corr * 100:.2f}% "
        f"(anchors quoted at theta = 0); neglected relativistic correction "
        f"gamma-1 = {gamma_m1 * 100:.3f}%",
    )

    return ConsistencyReport(
        l_f=l_f,
        lambda_macro=lam,
        lambda_de_broglie=lam_db,
        ratio_lambda_to_gap=lam / gap,
        ratio_lambda_to_pitch=lam / pitch,
        interference_order_l=order,
        fringe_shift_at_5pct=shift5,
        r_l_max=r_l,
        beam_diameter=diameter,
        toroid_clearance=clearance,
        simply_connected=simply_connected,
        cos_theta_correction=cos_corr,
        relativistic_gamma_minus_1=gamma_m1,
        verdict_lines=lines,
    )
