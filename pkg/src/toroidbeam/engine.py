"""Compiled propagation kernel.

One numba-jitted loop advances the whole ensemble: exact axial-potential
flow (piecewise parabola with analytic boundary crossings), Boris
rotation in the local magnetic field, surface-event detection with
intra-step linear interpolation, optional z-plane rms recording and
optional full per-step sampling (used for single-particle
trajectories). Keeping all of it in one kernel removes per-step Python
overhead (slow secondaries take tens of thousands of steps) and keeps
every run bit-deterministic: the loop is serial, particle-major, with
no reductions whose order could depend on the worker layout.

The kernel understands exactly the field contributions this package
defines: uniform axial fields, toroid signatures and axial electrode
profiles. ``parse_stack`` flattens a FieldStack into scalars/arrays for
the kernel and rejects anything else.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .constants import ELECTRON_QM
from .errors import ConfigError
from .fields import ElectrodeField, FieldStack, ToroidField, UniformAxialField

__all__ = ["parse_stack", "run_kernel"]

# Status codes duplicated for the kernel (numba cannot take the enum):
# keep in sync with particles.Status.
_IN_FLIGHT = 0
_ABSORBED_TOROID = 1
_ABSORBED_WIRE = 2
_COLLECTED_PLATE = 3
_LOST_WALL = 4
_LOST_TIMEOUT = 5
_REFLECTED_SOURCE = 6


def parse_stack(stack: FieldStack):
    """Flatten a FieldStack into kernel arrays.

    Returns (b0, toroid_z, toroid_ab0, toroid_w, leak_bx, leak_by,
    prof_z, prof_acc).
    """
    b0 = 0.0
    tor_z, tor_ab0, tor_w, leak_bx, leak_by = [], [], [], [], []
    for contrib in stack.contributions:
        if isinstance(contrib, UniformAxialField):
            b0 += contrib.b0
        elif isinstance(contrib, ToroidField):
            p = contrib.params
            tor_z.append(p.z_center)
            tor_ab0.append(p.core_perturbation_amplitude * contrib.b0)
            tor_w.append(p.perturbation_width)
            leak = p.leakage_coefficient * p.core_field
            leak_bx.append(leak * math.cos(p.leakage_azimuth))
            leak_by.append(leak * math.sin(p.leakage_azimuth))
        elif isinstance(contrib, ElectrodeField):
            pass  # merged below via axial_profile()
        else:
            raise ConfigError(
                f"propagation supports uniform/toroid/electrode contributions, "
                f"got {type(contrib).__name__}"
            )
    profile = stack.axial_profile()
    if profile is not None and len(profile.nodes_z) > 1:
        prof_z = np.asarray(profile.nodes_z, dtype=float)
        slopes = np.diff(np.asarray(profile.nodes_v, dtype=float)) / np.diff(prof_z)
        prof_acc = np.concatenate(([0.0], -ELECTRON_QM * slopes, [0.0]))
    else:
        prof_z = np.zeros(0)
        prof_acc = np.zeros(1)
    return (
        b0,
        np.asarray(tor_z, dtype=float),
        np.asarray(tor_ab0, dtype=float),
        np.asarray(tor_w, dtype=float),
        np.asarray(leak_bx, dtype=float),
        np.asarray(leak_by, dtype=float),
        prof_z,
        prof_acc,
    )


@numba.njit(cache=True, inline="always")
def _crossing_time(vz: float, a: float, d: float) -> float:
    """Smallest t > 0 with vz t + a t²/2 = d; inf if never."""
    if a == 0.0:
        if vz == 0.0 or d / vz <= 0.0:
            return math.inf
        return d / vz
    disc = vz * vz + 2.0 * a * d
    if disc < 0.0:
        return math.inf
    sq = math.sqrt(disc)
    t_best = math.inf
    r1 = (-vz - sq) / a
    r2 = (-vz + sq) / a
    if r1 > 0.0 and r1 < t_best:
        t_best = r1
    if r2 > 0.0 and r2 < t_best:
        t_best = r2
    return t_best


@numba.njit(cache=True)
def _flow_scalar(z, vz, tau, prof_z, prof_acc):
    """Exact (z, v_z) advance by time tau through the piecewise potential."""
    m = prof_z.shape[0]
    if m == 0:
        return z + vz * tau, vz
    rem = tau
    for _ in range(64):
        if rem <= 0.0:
            break
        s = 0
        while s < m and z >= prof_z[s]:
            s += 1
        if s >= 1 and z == prof_z[s - 1] and vz < 0.0:
            s -= 1
        a = prof_acc[s]
        lo = prof_z[s - 1] if s >= 1 else -math.inf
        hi = prof_z[s] if s < m else math.inf

        # full-advance candidate with extremum-aware bounds check
        zc = z + vz * rem + 0.5 * a * rem * rem
        zmin = z if z < zc else zc
        zmax = z if z > zc else zc
        if a != 0.0:
            t_ext = -vz / a
            if 0.0 < t_ext < rem:
                z_ext = z - 0.5 * vz * vz / a
                if z_ext < zmin:
                    zmin = z_ext
                if z_ext > zmax:
                    zmax = z_ext
        if zmin > lo and zmax < hi:
            return zc, vz + a * rem

        t_lo = _crossing_time(vz, a, lo - z)
        t_hi = _crossing_time(vz, a, hi - z)
        t_event = t_lo if t_lo < t_hi else t_hi
        if t_event >= rem:
            return zc, vz + a * rem
        vz = vz + a * t_event
        z = lo if t_lo <= t_hi else hi  # snap exactly onto the boundary
        rem -= t_event
    return z, vz


@numba.njit(cache=True, inline="always")
def _b_field(x, y, z, b0, tor_z, tor_ab0, tor_w, leak_bx, leak_by):
    bx = 0.0
    by = 0.0
    bz = b0
    for k in range(tor_z.shape[0]):
        u = (z - tor_z[k]) / tor_w[k]
        g = math.exp(-0.5 * u * u)
        bz += -tor_ab0[k] * g
        rad = 0.5 * tor_ab0[k] * (-u * g / tor_w[k])
        bx += rad * x + leak_bx[k] * g
        by += rad * y + leak_by[k] * g
    return bx, by, bz


@numba.njit(cache=True)
def run_kernel(
    pos,
    vel,
    status,
    final_t,
    min_z,
    max_z,
    grid_r,
    impact_flag,
    impact_x,
    impact_y,
    qm,
    b0,
    tor_z,
    tor_ab0,
    tor_w,
    leak_bx,
    leak_by,
    prof_z,
    prof_acc,
    interactions,
    toroid_plane_z,
    toroid_r_in2,
    toroid_off,
    grid_z,
    wire_r,
    pitch,
    block_on_y,
    plate_z,
    chamber_r2,
    dt,
    n_steps,
    planes,
    plane_sums,
    plane_counts,
    record_planes,
    samples,
    record_samples,
):
    n = pos.shape[0]
    half = 0.5 * dt
    alive = 0
    for i in range(n):
        if status[i] == _IN_FLIGHT:
            alive += 1
    last_recorded = 0
    if record_samples and n > 0:
        samples[0, 0] = 0.0
        for c in range(3):
            samples[0, 1 + c] = pos[0, c]
            samples[0, 4 + c] = vel[0, c]

    for step in range(n_steps):
        if alive == 0:
            break
        t_end = (step + 1) * dt
        for i in range(n):
            if status[i] != _IN_FLIGHT:
                continue
            x0 = pos[i, 0]
            y0 = pos[i, 1]
            z0 = pos[i, 2]
            vx = vel[i, 0]
            vy = vel[i, 1]
            vz = vel[i, 2]

            # half transport
            z1, vz = _flow_scalar(z0, vz, half, prof_z, prof_acc)
            x1 = x0 + vx * half
            y1 = y0 + vy * half

            # Boris rotation in the local field
            bx, by, bz = _b_field(
                x1, y1, z1, b0, tor_z, tor_ab0, tor_w, leak_bx, leak_by
            )
            tx = qm * bx * half
            ty = qm * by * half
            tz = qm * bz * half
            t2 = tx * tx + ty * ty + tz * tz
            f = 2.0 / (1.0 + t2)
            sx = f * tx
            sy = f * ty
            sz = f * tz
            px = vx + (vy * tz - vz * ty)
            py = vy + (vz * tx - vx * tz)
            pz = vz + (vx * ty - vy * tx)
            vx = vx + (py * sz - pz * sy)
            vy = vy + (pz * sx - px * sz)
            vz = vz + (px * sy - py * sx)

            # half transport
            z2, vz = _flow_scalar(z1, vz, half, prof_z, prof_acc)
            x2 = x1 + vx * half
            y2 = y1 + vy * half

            if z2 < min_z[i]:
                min_z[i] = z2
            if z2 > max_z[i]:
                max_z[i] = z2

            if record_planes:
                za = z0 if z0 < z2 else z2
                zb = z0 if z0 > z2 else z2
                k = np.searchsorted(planes, za)
                while k < planes.shape[0] and planes[k] < zb:
                    dz = z2 - z0
                    frac = 0.5 if dz == 0.0 else (planes[k] - z0) / dz
                    xi = x0 + frac * (x2 - x0)
                    yi = y0 + frac * (y2 - y0)
                    plane_sums[k] += xi * xi + yi * yi
                    plane_counts[k] += 1
                    k += 1

            terminal = _IN_FLIGHT
            ex = x2
            ey = y2
            ez = z2
            et = t_end

            dz_step = z2 - z0
            # source-plane exit
            if z2 <= 0.0:
                frac = 1.0 if dz_step == 0.0 else (0.0 - z0) / dz_step
                terminal = _REFLECTED_SOURCE
                ex = x0 + frac * (x2 - x0)
                ey = y0 + frac * (y2 - y0)
                ez = 0.0
                et = t_end - dt + frac * dt
            elif interactions:
                # toroid plane
                if (z0 < toroid_plane_z) != (z2 < toroid_plane_z):
                    frac = (toroid_plane_z - z0) / dz_step
                    xi = x0 + frac * (x2 - x0)
                    yi = y0 + frac * (y2 - y0)
                    ddx = xi - toroid_off
                    if ddx * ddx + yi * yi >= toroid_r_in2:
                        terminal = _ABSORBED_TOROID
                        ex = xi
                        ey = yi
                        ez = toroid_plane_z
                        et = t_end - dt + frac * dt
                # grid plane
                if terminal == _IN_FLIGHT and (z0 < grid_z) != (z2 < grid_z):
                    frac = (grid_z - z0) / dz_step
                    xi = x0 + frac * (x2 - x0)
                    yi = y0 + frac * (y2 - y0)
                    forward = z2 > z0
                    if forward and math.isnan(grid_r[i]):
                        grid_r[i] = math.sqrt(xi * xi + yi * yi)
                    coord = yi if block_on_y else xi
                    folded = abs(
                        (coord + 0.5 * pitch) % pitch - 0.5 * pitch
                    )
                    if folded <= wire_r:
                        terminal = _ABSORBED_WIRE
                        ex = xi
                        ey = yi
                        ez = grid_z
                        et = t_end - dt + frac * dt
                        if forward and impact_flag[i] == 0:
                            impact_flag[i] = 1
                            impact_x[i] = xi
                            impact_y[i] = yi
                # plate
                if terminal == _IN_FLIGHT and z2 >= plate_z:
                    frac = (plate_z - z0) / dz_step
                    terminal = _COLLECTED_PLATE
                    ex = x0 + frac * (x2 - x0)
                    ey = y0 + frac * (y2 - y0)
                    ez = plate_z
                    et = t_end - dt + frac * dt
                # chamber wall
                if terminal == _IN_FLIGHT and x2 * x2 + y2 * y2 >= chamber_r2:
                    terminal = _LOST_WALL

            if terminal != _IN_FLIGHT:
                status[i] = terminal
                pos[i, 0] = ex
                pos[i, 1] = ey
                pos[i, 2] = ez
                vel[i, 0] = vx
                vel[i, 1] = vy
                vel[i, 2] = vz
                final_t[i] = et
                alive -= 1
            else:
                pos[i, 0] = x2
                pos[i, 1] = y2
                pos[i, 2] = z2
                vel[i, 0] = vx
                vel[i, 1] = vy
                vel[i, 2] = vz

            if record_samples and i == 0:
                samples[step + 1, 0] = t_end
                samples[step + 1, 1] = pos[0, 0]
                samples[step + 1, 2] = pos[0, 1]
                samples[step + 1, 3] = pos[0, 2]
                samples[step + 1, 4] = vel[0, 0]
                samples[step + 1, 5] = vel[0, 1]
                samples[step + 1, 6] = vel[0, 2]
                last_recorded = step + 1

    for i in range(n):
        if status[i] == _IN_FLIGHT:
            status[i] = _LOST_TIMEOUT
            final_t[i] = n_steps * dt
    return last_recorded + 1 if record_samples else 0
