"""Trajectory propagation.

Two propagators live here:

``analytic_helix``
    Closed-form electron motion in a uniform axial magnetic field
    (exact velocity rotation + drift), used as the oracle for the
    numerical scheme and for the refocusing geometry: a particle
    returns to its launch transverse point after every full gyration
    period, i.e. every ``l_f = 2π v_z / Ω`` of axial travel.

``lorentz_step`` / the ensemble engine
    A volume-preserving second-order splitting. The magnetic update is
    the Boris rotation (Boris 1970): an exactly norm-preserving
    rotation through ``2·atan(|q/m| |B| dt / 2)``, so kinetic energy in
    a pure magnetic field is conserved to rounding while the gyrophase
    carries the O(dt²) error that sets the scheme's convergence order.

    Inside the chamber the only electric field is the axial electrode
    profile E_z(z) = -dV/dz with piecewise-constant segments. Impulse
    kicks at the default step (T/200) are far too coarse at the ramp
    kinks: a slow secondary can numerically tunnel through a retarding
    barrier and primary energy bookkeeping picks up spurious eV-scale
    errors. The engine therefore advances the axial coordinate pair
    (z, v_z) through the potential *exactly* (piecewise-parabolic flow
    with analytic boundary crossings and turning points), split
    symmetrically around the magnetic rotation. Every sub-map conserves
    the total energy ½m|v|² + qV(z) identically, so energy is conserved
    to rounding for any static stack built from these field models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .apparatus import Apparatus
from .constants import ELECTRON_QM, ELEM_CHARGE, ELECTRON_MASS
from .errors import ConfigError
from .fields import FieldStack, PotentialProfile
from .particles import ParticleState, Species, Status, Trajectory

__all__ = [
    "larmor_period",
    "analytic_helix",
    "boris_rotate",
    "lorentz_step",
    "AxialFlow",
    "EnsembleResult",
    "advance_ensemble",
    "propagate",
]

# propagate() refuses steps coarser than this fraction of the gyration period
MIN_STEPS_PER_PERIOD = 50


def larmor_period(b0: float) -> float:
    """Electron gyration period 2π m / (e B) [s]."""
    return 2.0 * math.pi * ELECTRON_MASS / (ELEM_CHARGE * b0)


def analytic_helix(initial: ParticleState, b0: float, t: float) -> ParticleState:
    """Exact electron state after time ``t`` in a uniform field ``b0 ẑ``.

    The transverse velocity rotates through ``Ω t`` (sense fixed by the
    negative charge), the transverse position follows the gyro-circle
    about the guiding center, and z advances by ``v_z t``. Speed is
    conserved exactly. ``b0 = 0`` falls back to a straight line.
    """
    x0, y0, z0 = initial.position
    vx0, vy0, vz0 = initial.velocity
    if b0 == 0.0:
        return ParticleState(
            np.array([x0 + vx0 * t, y0 + vy0 * t, z0 + vz0 * t]),
            initial.velocity.copy(),
            initial.species,
            initial.status,
        )
    omega = ELECTRON_QM * b0  # signed gyrofrequency
    c, s = math.cos(omega * t), math.sin(omega * t)
    vx = vx0 * c + vy0 * s
    vy = -vx0 * s + vy0 * c
    x = x0 + (vx0 * s - vy0 * (c - 1.0)) / omega
    y = y0 + (vy0 * s + vx0 * (c - 1.0)) / omega
    z = z0 + vz0 * t
    return ParticleState(
        np.array([x, y, z]), np.array([vx, vy, vz0]), initial.species, initial.status
    )


def boris_rotate(vel: np.ndarray, b: np.ndarray, dt: float) -> np.ndarray:
    """Boris magnetic rotation of velocities ``vel`` (N, 3) in fields ``b``.

    Exactly norm-preserving; rotation angle 2·atan(|q/m||B| dt/2).
    """
    t_vec = (0.5 * dt * ELECTRON_QM) * b
    t2 = np.einsum("ij,ij->i", t_vec, t_vec)
    s_vec = t_vec * (2.0 / (1.0 + t2))[:, None]
    v_prime = vel + np.cross(vel, t_vec)
    return vel + np.cross(v_prime, s_vec)


def lorentz_step(
    state: ParticleState, e: np.ndarray, b: np.ndarray, dt: float
) -> ParticleState:
    """One step of the splitting scheme in locally constant fields.

    Drift dt/2, half electric kick, Boris rotation, half electric kick,
    drift dt/2. Volume preserving and second-order accurate; in a pure
    magnetic field the speed is conserved to machine rounding, and in a
    uniform electric field the positions match the exact parabola at
    step boundaries.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    e3 = np.asarray(e, dtype=float).reshape(1, 3)
    b3 = np.asarray(b, dtype=float).reshape(1, 3)
    pos = state.position + 0.5 * dt * state.velocity
    kick = (0.5 * dt * ELECTRON_QM) * e3
    v = state.velocity.reshape(1, 3) + kick
    v = boris_rotate(v, b3, dt)
    v = v + kick
    pos = pos + 0.5 * dt * v[0]
    return ParticleState(pos, v[0], state.species, state.status)


class AxialFlow:
    """Exact (z, v_z) flow through a piecewise-linear axial potential.

    Within each segment the acceleration is constant, so the motion is
    a parabola integrated in closed form; segment boundaries and
    turning points are located analytically. Conserves
    ½ v_z² + qV(z)/m identically (up to rounding), for arbitrarily
    coarse time steps.
    """

    _MAX_SEGMENT_EVENTS = 64

    def __init__(self, profile: PotentialProfile):
        self.zb = np.asarray(profile.nodes_z, dtype=float)
        nv = np.asarray(profile.nodes_v, dtype=float)
        if len(self.zb) > 1:
            slopes = np.diff(nv) / np.diff(self.zb)
        else:
            slopes = np.zeros(0)
        # electron acceleration per segment: a = qE_z/m = -q (dV/dz)/m
        seg_acc = -ELECTRON_QM * slopes
        self.acc = np.concatenate(([0.0], seg_acc, [0.0]))

    def advance(
        self, z: np.ndarray, vz: np.ndarray, tau: float
    ) -> tuple[np.ndarray, np.ndarray]:
        z = z.copy()
        vz = vz.copy()
        rem = np.full_like(z, tau)
        active = np.arange(z.size)
        for _ in range(self._MAX_SEGMENT_EVENTS):
            if active.size == 0:
                break
            za, va, ra = z[active], vz[active], rem[active]
            s = np.searchsorted(self.zb, za, side="right")
            # a particle sitting exactly on a node and moving left belongs
            # to the left segment
            on_node = (s >= 1) & (za == self.zb.take(s - 1, mode="clip"))
            s = np.where(on_node & (va < 0.0), s - 1, s)
            a = self.acc[s]

            lo = np.where(s >= 1, self.zb.take(s - 1, mode="clip"), -np.inf)
            hi = np.where(
                s <= len(self.zb) - 1,
                self.zb.take(np.minimum(s, len(self.zb) - 1)),
                np.inf,
            )
            t_lo = _first_crossing_time(va, a, lo - za)
            t_hi = _first_crossing_time(va, a, hi - za)
            t_event = np.minimum(t_lo, t_hi)

            t_adv = np.minimum(t_event, ra)
            z_new = za + va * t_adv + 0.5 * a * t_adv * t_adv
            vz_new = va + a * t_adv
            hit = t_event <= ra
            # snap exactly onto the crossed boundary so segment selection
            # stays consistent on the next pass
            z_new = np.where(hit & (t_lo <= t_hi), lo, z_new)
            z_new = np.where(hit & (t_hi < t_lo), hi, z_new)

            z[active] = z_new
            vz[active] = vz_new
            new_rem = np.where(hit, ra - t_adv, 0.0)
            rem[active] = new_rem
            active = active[hit & (new_rem > 0.0)]
        return z, vz


def _first_crossing_time(vz: np.ndarray, a: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Smallest t > 0 with ``vz t + a t²/2 = d``; inf if never reached."""
    out = np.full_like(d, np.inf)
    lin = a == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lin = d / vz
    ok = lin & np.isfinite(t_lin) & (t_lin > 0.0)
    out[ok] = t_lin[ok]

    quad = ~lin
    if np.any(quad):
        d_q = np.where(quad, d, 0.0)  # avoid 0*inf in the linear rows
        disc = vz * vz + 2.0 * a * d_q
        has_root = quad & (disc >= 0.0)
        sq = np.sqrt(np.where(has_root, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = (-vz - sq) / a
            r2 = (-vz + sq) / a
        r1 = np.where(has_root & (r1 > 0.0), r1, np.inf)
        r2 = np.where(has_root & (r2 > 0.0), r2, np.inf)
        out = np.where(quad, np.minimum(np.minimum(r1, r2), out), out)
    return out


@dataclass
class EnsembleResult:
    """Index-ordered outcome of propagating an ensemble."""

    status: np.ndarray            # (N,) Status values as ints
    positions: np.ndarray         # (N, 3) final (event-interpolated) positions
    velocities: np.ndarray        # (N, 3) final velocities
    times: np.ndarray             # (N,) flight time at termination
    min_z: np.ndarray             # (N,) step-resolved axial minimum
    max_z: np.ndarray             # (N,) step-resolved axial maximum
    grid_radius: np.ndarray       # (N,) transverse radius at first forward grid
    #                               crossing; nan if the plane was never crossed
    wire_impact_parent: np.ndarray  # (M,) ensemble indices of wire impacts
    wire_impact_xy: np.ndarray      # (M, 2) impact positions on the grid plane
    plane_sums: np.ndarray | None = None    # (P,) sums of r^2 at requested planes
    plane_counts: np.ndarray | None = None  # (P,) crossing counts
    samples: np.ndarray | None = None       # (K, 7) per-step (t, r, v) of particle 0

    def count(self, status: Status) -> int:
        return int(np.count_nonzero(self.status == int(status)))


def advance_ensemble(
    positions: np.ndarray,
    velocities: np.ndarray,
    stack: FieldStack,
    apparatus: Apparatus | None,
    dt: float,
    t_max: float,
    *,
    interactions: bool = True,
    planes: np.ndarray | None = None,
    record_samples: bool = False,
) -> EnsembleResult:
    """Propagate an ensemble until surface events, source exit or t_max.

    Surface crossings (toroid plane, grid plane, plate) are located by
    linear interpolation inside the step. When ``interactions`` is
    false, only the z <= 0 exit and t_max terminate particles (used by
    beam-envelope diagnostics). ``planes`` requests accumulation of
    r² sums/counts at the given sorted z planes; ``record_samples``
    stores every step of particle 0 (single-trajectory use).
    """
    from . import engine

    if not dt > 0.0:
        raise ConfigError(f"dt must be positive, got {dt}")
    b0_ref = stack.reference_axial_b0()
    if b0_ref > 0.0 and dt > larmor_period(b0_ref) / MIN_STEPS_PER_PERIOD:
        raise ConfigError(
            f"dt = {dt:.3e} s does not resolve the gyration period "
            f"(need dt <= T/{MIN_STEPS_PER_PERIOD} = "
            f"{larmor_period(b0_ref) / MIN_STEPS_PER_PERIOD:.3e} s)"
        )

    n = positions.shape[0]
    pos = positions.astype(float).copy()
    vel = velocities.astype(float).copy()
    status = np.zeros(n, dtype=np.int8)
    final_t = np.zeros(n)
    min_z = pos[:, 2].copy()
    max_z = pos[:, 2].copy()
    grid_radius = np.full(n, np.nan)
    impact_flag = np.zeros(n, dtype=np.int8)
    impact_x = np.zeros(n)
    impact_y = np.zeros(n)

    (b0, tor_z, tor_ab0, tor_w, leak_bx, leak_by, prof_z, prof_acc) = (
        engine.parse_stack(stack)
    )

    if apparatus is not None:
        geo = (
            apparatus.toroid_z,
            apparatus.toroid_inner_radius**2,
            apparatus.toroid_offset,
            apparatus.grid_z,
            apparatus.wire_radius,
            apparatus.grid_pitch,
            1 if apparatus.grid_orientation == "x" else 0,
            apparatus.plate_z,
            apparatus.chamber_radius**2,
        )
        do_interact = 1 if interactions else 0
    else:
        geo = (math.inf, math.inf, 0.0, math.inf, 0.0, 1.0, 1, math.inf, math.inf)
        do_interact = 0

    n_steps = int(math.ceil(t_max / dt))
    if planes is not None:
        planes_arr = np.asarray(planes, dtype=float)
        plane_sums = np.zeros(planes_arr.size)
        plane_counts = np.zeros(planes_arr.size, dtype=np.int64)
        record_planes = 1
    else:
        planes_arr = np.zeros(0)
        plane_sums = np.zeros(0)
        plane_counts = np.zeros(0, dtype=np.int64)
        record_planes = 0
    samples = np.zeros((n_steps + 1, 7)) if record_samples else np.zeros((1, 7))

    n_recorded = engine.run_kernel(
        pos, vel, status, final_t, min_z, max_z, grid_radius,
        impact_flag, impact_x, impact_y,
        ELECTRON_QM, b0, tor_z, tor_ab0, tor_w, leak_bx, leak_by,
        prof_z, prof_acc,
        do_interact, *geo,
        dt, n_steps,
        planes_arr, plane_sums, plane_counts, record_planes,
        samples, 1 if record_samples else 0,
    )

    hit = impact_flag == 1
    wip = np.nonzero(hit)[0]
    wxy = np.column_stack([impact_x[hit], impact_y[hit]])

    return EnsembleResult(
        status=status,
        positions=pos,
        velocities=vel,
        times=final_t,
        min_z=min_z,
        max_z=max_z,
        grid_radius=grid_radius,
        wire_impact_parent=wip,
        wire_impact_xy=wxy,
        plane_sums=plane_sums if record_planes else None,
        plane_counts=plane_counts if record_planes else None,
        samples=samples[:n_recorded] if record_samples else None,
    )


def propagate(
    state: ParticleState,
    stack: FieldStack,
    apparatus: Apparatus,
    dt: float,
    t_max: float,
    sample_stride: int = 1,
) -> Trajectory:
    """Propagate one particle to a surface event, source exit or t_max.

    Returns a trajectory sampled every ``sample_stride`` steps (plus the
    terminal point). Axial turning points in retarding potentials arise
    from the integrated electrode field; the step-resolved ``min_z`` /
    ``max_z`` record how far the particle actually got.
    """
    if state.status.terminal:
        raise ValueError("cannot propagate a terminated particle")
    if sample_stride < 1:
        raise ValueError("sample_stride must be >= 1")
    res = advance_ensemble(
        state.position.reshape(1, 3),
        state.velocity.reshape(1, 3),
        stack,
        apparatus,
        dt,
        t_max,
        record_samples=True,
    )
    final_t = float(res.times[0])
    rows = res.samples
    # keep strides of the step record, truncated at the event time, then
    # append the exact (interpolated) terminal point
    keep = rows[:, 0] < final_t
    kept = rows[keep][::sample_stride]
    times = np.append(kept[:, 0], final_t)
    pts = np.vstack([kept[:, 1:4], res.positions[0]])
    vels = np.vstack([kept[:, 4:7], res.velocities[0]])

    vz = rows[: int(np.count_nonzero(keep)) + 1, 6]
    signs = np.sign(vz[vz != 0.0])
    turnarounds = int(np.count_nonzero(np.diff(signs) != 0.0))
    events = ("axial_turnaround",) * turnarounds

    return Trajectory(
        times=times,
        positions=pts,
        velocities=vels,
        status=Status(int(res.status[0])),
        flight_time=final_t,
        min_z=float(res.min_z[0]),
        max_z=float(res.max_z[0]),
        species=state.species,
        events=events,
    )
