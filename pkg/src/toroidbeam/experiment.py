"""Shot and sweep orchestration.

``run_shot`` samples the beam, propagates every primary through the
field stack and apparatus, spawns one generation of secondaries at
grid-wire impacts and aggregates plate/loss fractions. Results are
deterministic for a fixed (config, seed): particles own counter-based
RNG streams, propagation is elementwise, and reductions run over
index-ordered arrays, so the worker count never changes the numbers.

``sweep`` repeats the shot over one swept parameter with an identical
seed; with an ideal toroid (no leakage, no core distortion) the
confined flux exerts no force and the plate current is exactly flat in
the winding current — the classical null. ``focal_profile`` records
the rms beam envelope against z in the guide field alone, whose minima
mark the refocusing planes.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass

import numpy as np

from .apparatus import sample_emission
from .beam import sample_beam_arrays, secondary_rng
from .dynamics import advance_ensemble
from .errors import ConfigError
from .fields import FieldStack
from .particles import Status

__all__ = ["ShotResult", "SweepResult", "run_shot", "sweep", "focal_profile"]

SWEEPABLE_PARAMETERS = (
    "toroid_current_a",
    "b0_mt",
    "energy_ev",
    "toroid_leakage_epsilon",
    "toroid_offset_mm",
)

_LOSS_CLASSES = (
    ("collected_plate", Status.COLLECTED_PLATE),
    ("absorbed_toroid", Status.ABSORBED_TOROID),
    ("absorbed_wire", Status.ABSORBED_WIRE),
    ("lost_wall", Status.LOST_WALL),
    ("lost_timeout", Status.LOST_TIMEOUT),
    ("reflected_source", Status.REFLECTED_SOURCE),
)


@dataclass(frozen=True)
class ShotResult:
    """Aggregated outcome of one shot.

    Fractions are relative to launched primaries; the primary breakdown
    counts sum exactly to the launched number.
    """

    n_primaries: int
    n_secondaries: int
    primary_counts: dict[str, int]
    secondary_counts: dict[str, int]
    rms_radius_grid: float

    @property
    def plate_fraction(self) -> float:
        return self.primary_counts["collected_plate"] / self.n_primaries

    @property
    def secondary_plate_fraction(self) -> float:
        return self.secondary_counts["collected_plate"] / self.n_primaries

    def loss_fraction(self, name: str) -> float:
        return self.primary_counts[name] / self.n_primaries

    def summary_row(self) -> dict[str, float]:
        row = {
            "plate_fraction": self.plate_fraction,
            "secondary_plate_fraction": self.secondary_plate_fraction,
        }
        for name, _ in _LOSS_CLASSES[1:]:
            row[f"frac_{name}"] = self.loss_fraction(name)
        row["rms_radius_grid_m"] = self.rms_radius_grid
        row["n_primaries"] = self.n_primaries
        row["n_secondaries"] = self.n_secondaries
        return row


@dataclass(frozen=True)
class SweepResult:
    """Shots at strictly monotone values of one swept parameter."""

    parameter: str
    values: tuple[float, ...]
    shots: tuple[ShotResult, ...]
    fingerprint: str
    seed: int

    def __post_init__(self) -> None:
        diffs = np.diff(self.values)
        if len(self.values) < 2 or not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigError("sweep values must be strictly monotone")

    def plate_fractions(self) -> np.ndarray:
        return np.array([s.plate_fraction for s in self.shots])


def _count_statuses(status: np.ndarray) -> dict[str, int]:
    return {
        name: int(np.count_nonzero(status == int(st))) for name, st in _LOSS_CLASSES
    }


def _chunk_ranges(n: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, n))
    size = (n + workers - 1) // workers
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def _run_primary_chunk(args) -> tuple:
    spec, stack, apparatus, dt, t_max, z_inject, start, stop = args
    pos, vel = sample_beam_arrays(spec, start, stop)
    pos[:, 2] += z_inject
    res = advance_ensemble(pos, vel, stack, apparatus, dt, t_max)
    return (
        res.status,
        res.grid_radius,
        res.wire_impact_parent + start,
        res.wire_impact_xy,
    )


def _run_secondary_chunk(args) -> np.ndarray:
    (seed, yield_params, grid_z, wire_radius, stack, apparatus, dt, t_max,
     parents, xys) = args
    pos_list, vel_list = [], []
    for parent, xy in zip(parents, xys):
        rng = secondary_rng(seed, int(parent))
        n = int(rng.poisson(yield_params.yield_0))
        if n == 0:
            continue
        # emitted from the upstream face of the wire, back toward the source
        vels = sample_emission(rng, n, yield_params, np.array([0.0, 0.0, -1.0]))
        pos = np.empty((n, 3))
        pos[:, 0] = xy[0]
        pos[:, 1] = xy[1]
        pos[:, 2] = grid_z - max(wire_radius, 1e-6)
        pos_list.append(pos)
        vel_list.append(vels)
    if not pos_list:
        return np.zeros(0, dtype=np.int8)
    pos = np.concatenate(pos_list)
    vel = np.concatenate(vel_list)
    res = advance_ensemble(pos, vel, stack, apparatus, dt, t_max)
    return res.status


def run_shot(config, seed: int | None = None, workers: int = 1) -> ShotResult:
    """Run one complete shot described by a RunConfig.

    Deterministic for fixed (config, seed) irrespective of ``workers``.
    """
    config = config.validated()
    if seed is not None:
        config = config.with_updates(seed=seed)
    spec = config.beam_spec()
    stack = config.field_stack()
    apparatus = config.apparatus()
    yield_params = config.secondary_params()
    dt = config.dt()
    t_max = config.t_max()
    z_inject = apparatus.source_ramp  # gun exit plane: drift potential

    chunks = _chunk_ranges(spec.count, workers)
    primary_args = [
        (spec, stack, apparatus, dt, t_max, z_inject, a, b) for a, b in chunks
    ]
    if len(chunks) > 1:
        with concurrent.futures.ProcessPoolExecutor(len(chunks)) as pool:
            primary_out = list(pool.map(_run_primary_chunk, primary_args))
    else:
        primary_out = [_run_primary_chunk(primary_args[0])]

    status = np.concatenate([o[0] for o in primary_out])
    grid_r = np.concatenate([o[1] for o in primary_out])
    impact_parents = np.concatenate([o[2] for o in primary_out])
    impact_xys = (
        np.concatenate([o[3] for o in primary_out])
        if any(len(o[3]) for o in primary_out)
        else np.zeros((0, 2))
    )

    primary_counts = _count_statuses(status)
    crossed = ~np.isnan(grid_r)
    rms_grid = (
        float(np.sqrt(np.mean(grid_r[crossed] ** 2))) if np.any(crossed) else math.nan
    )

    # one generation of secondaries, seeded per impact by the parent index
    secondary_counts = {name: 0 for name, _ in _LOSS_CLASSES}
    n_secondaries = 0
    if yield_params.yield_0 > 0.0 and len(impact_parents):
        order = np.argsort(impact_parents, kind="stable")
        impact_parents = impact_parents[order]
        impact_xys = impact_xys[order]
        sec_chunks = _chunk_ranges(len(impact_parents), workers)
        sec_args = [
            (
                spec.seed, yield_params, apparatus.grid_z, apparatus.wire_radius,
                stack, apparatus, dt, t_max,
                impact_parents[a:b], impact_xys[a:b],
            )
            for a, b in sec_chunks
        ]
        if len(sec_chunks) > 1:
            with concurrent.futures.ProcessPoolExecutor(len(sec_chunks)) as pool:
                sec_out = list(pool.map(_run_secondary_chunk, sec_args))
        else:
            sec_out = [_run_secondary_chunk(sec_args[0])]
        sec_status = np.concatenate(sec_out) if sec_out else np.zeros(0, dtype=np.int8)
        n_secondaries = int(sec_status.size)
        secondary_counts = _count_statuses(sec_status)

    return ShotResult(
        n_primaries=spec.count,
        n_secondaries=n_secondaries,
        primary_counts=primary_counts,
        secondary_counts=secondary_counts,
        rms_radius_grid=rms_grid,
    )


def sweep(
    config,
    parameter: str,
    values,
    seed: int | None = None,
    workers: int = 1,
) -> SweepResult:
    """Run one shot per parameter value with an identical seed."""
    if parameter not in SWEEPABLE_PARAMETERS:
        raise ConfigError(
            f"unknown sweep parameter {parameter!r}; "
            f"choose one of {', '.join(SWEEPABLE_PARAMETERS)}"
        )
    values = tuple(float(v) for v in values)
    if len(values) < 2:
        raise ConfigError("sweep needs at least two parameter values")
    config = config.validated()
    if seed is not None:
        config = config.with_updates(seed=seed)
    shots = tuple(
        run_shot(config.with_updates(**{parameter: v}), workers=workers)
        for v in values
    )
    return SweepResult(
        parameter=parameter,
        values=values,
        shots=shots,
        fingerprint=config.fingerprint(),
        seed=config.seed,
    )


def focal_profile(
    config,
    z_samples,
    stack: FieldStack | None = None,
    workers: int = 1,
) -> list[tuple[float, float]]:
    """rms transverse beam radius at each z plane.

    Runs in the uniform guide field alone by default (pass ``stack`` to
    override); toroid and grid interactions are disabled for this
    diagnostic, so the profile is the pure magnetic envelope whose
    minima sit at integer multiples of the focal length.
    """
    config = config.validated()
    spec = config.beam_spec()
    if stack is None:
        stack = config.guide_stack()
    planes = np.asarray(sorted(float(z) for z in z_samples))
    if planes.size == 0:
        raise ConfigError("focal_profile needs at least one z sample")

    pos, vel = sample_beam_arrays(spec)
    v_par_min = float(np.min(vel[:, 2]))
    if v_par_min <= 0.0:
        raise ConfigError("focal_profile requires a forward-moving beam")
    t_max = 1.05 * float(planes[-1]) / v_par_min
    res = advance_ensemble(
        pos, vel, stack, None, config.dt(), t_max,
        interactions=False, planes=planes,
    )

    out = []
    for zp, s, c in zip(planes, res.plane_sums, res.plane_counts):
        rms = math.sqrt(s / c) if c else math.nan
        out.append((float(zp), rms))
    return out
