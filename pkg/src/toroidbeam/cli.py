"""Command-line front end.

Subcommands: ``analyze`` (consistency report), ``simulate`` (one shot),
``sweep`` (one shot per swept value), ``focal-scan`` (rms envelope vs
z). Every CSV artifact starts with '#'-prefixed provenance comments
(package version, command, config fingerprint, seed) so any figure can
be regenerated. Exit codes: 0 success, 1 usage, 2 configuration,
3 runtime failure (timeout-dominated shots).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import BeamFieldPoint, consistency_report
from .beam import sample_beam_arrays
from .config import RunConfig, load_config
from .dynamics import propagate
from .errors import ConfigError, RunError
from .experiment import SWEEPABLE_PARAMETERS, focal_profile, run_shot, sweep
from .particles import ParticleState, Species

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

# a shot in which most primaries never terminate is not a usable result
TIMEOUT_DOMINATED_FRACTION = 0.5

SHOT_COLUMNS = (
    "plate_fraction",
    "secondary_plate_fraction",
    "frac_absorbed_toroid",
    "frac_absorbed_wire",
    "frac_lost_wall",
    "frac_lost_timeout",
    "frac_reflected_source",
    "rms_radius_grid_m",
    "n_primaries",
    "n_secondaries",
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage problems, not argparse's 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="toroidbeam",
        description=(
            "Classical electron-beam transport through a flux toroid: "
            "simulation and wave-interpretation audit."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="config file (defaults if omitted)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--workers", type=int, default=1, help="worker count (does not change results)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")

    p = sub.add_parser("analyze", help="closed-form audit of the operating point")
    common(p)

    p = sub.add_parser("simulate", help="run one shot")
    common(p)

    p = sub.add_parser("sweep", help="run one shot per swept parameter value")
    common(p)
    p.add_argument("--param", required=True, choices=SWEEPABLE_PARAMETERS)
    p.add_argument("--from", dest="from_value", type=float, required=True)
    p.add_argument("--to", dest="to_value", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)

    p = sub.add_parser("focal-scan", help="rms beam envelope against z in the guide field")
    common(p)
    p.add_argument("--zmax-cm", type=float, default=None, help="scan end (default ~3.1 focal lengths)")
    p.add_argument("--zstep-mm", type=float, default=1.0)

    return parser


def _load(args) -> RunConfig:
    if args.config is None:
        config = RunConfig().validated()
    else:
        config = load_config(args.config)
    if args.seed is not None:
        config = config.with_updates(seed=args.seed).validated()
    return config


def _provenance(config: RunConfig, command: str) -> list[str]:
    return [
        f"# toroidbeam {__version__}",
        f"# command: {command}",
        f"# config_fingerprint: {config.fingerprint()}",
        f"# seed: {config.seed}",
    ]


def _write_csv(path: Path, header_lines: list[str], columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for line in header_lines:
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _shot_row(shot) -> list:
    row = shot.summary_row()
    return [row[c] for c in SHOT_COLUMNS]


def _cmd_analyze(args) -> int:
    config = _load(args)
    point = BeamFieldPoint(
        energy_ev=config.energy_ev,
        b0=config.b0,
        length=config.l_cm * 1e-2,
        theta_i_max=math.radians(config.theta_max_deg),
    )
    report = consistency_report(point, config.apparatus())
    print(report.to_text())
    out = args.out / "report.csv"
    _write_csv(
        out,
        _provenance(config, "analyze"),
        ("key", "value"),
        report.to_rows(),
    )
    (args.out / "effective_config.cfg").write_text(config.dump())
    print(f"\nwrote {out}")
    return EXIT_OK


def _dump_trajectories(config: RunConfig, out_dir: Path) -> None:
    if config.trajectory_stride <= 0 or config.trajectory_count <= 0:
        return
    spec = config.beam_spec()
    n = min(config.trajectory_count, spec.count)
    pos, vel = sample_beam_arrays(spec, 0, n)
    pos[:, 2] += config.apparatus().source_ramp
    stack = config.field_stack()
    apparatus = config.apparatus()
    for i in range(n):
        traj = propagate(
            ParticleState(pos[i], vel[i], Species.PRIMARY),
            stack,
            apparatus,
            config.dt(),
            config.t_max(),
            sample_stride=config.trajectory_stride,
        )
        _write_csv(
            out_dir / f"trajectory_{i:04d}.csv",
            _provenance(config, "simulate (trajectory dump)"),
            ("t_s", "x_m", "y_m", "z_m", "vx_mps", "vy_mps", "vz_mps"),
            traj.to_csv_rows(),
        )


def _cmd_simulate(args) -> int:
    config = _load(args)
    shot = run_shot(config, workers=args.workers)
    out = args.out / "shot.csv"
    _write_csv(out, _provenance(config, "simulate"), SHOT_COLUMNS, [_shot_row(shot)])
    (args.out / "effective_config.cfg").write_text(config.dump())
    _dump_trajectories(config, args.out)
    for key, value in shot.summary_row().items():
        print(f"{key} = {value}")
    print(f"wrote {out}")
    if shot.loss_fraction("lost_timeout") > TIMEOUT_DOMINATED_FRACTION:
        raise RunError(
            f"timeout-dominated shot: {shot.loss_fraction('lost_timeout'):.1%} "
            "of primaries never terminated (raise t_max_us)"
        )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _load(args)
    if args.steps < 2:
        raise ConfigError("sweep --steps must be >= 2")
    values = np.linspace(args.from_value, args.to_value, args.steps)
    result = sweep(config, args.param, values, workers=args.workers)
    out = args.out / "sweep.csv"
    header = _provenance(config, f"sweep --param {args.param}")
    header.append(f"# parameter: {args.param}")
    _write_csv(
        out,
        header,
        ("param_value",) + SHOT_COLUMNS,
        ([v] + _shot_row(s) for v, s in zip(result.values, result.shots)),
    )
    (args.out / "effective_config.cfg").write_text(config.dump())
    pf = result.plate_fractions()
    print(f"{args.param}: {result.values[0]} .. {result.values[-1]} ({args.steps} shots)")
    print(f"plate_fraction: min {pf.min():.6f}, max {pf.max():.6f}")
    print(f"wrote {out}")
    if any(
        s.loss_fraction("lost_timeout") > TIMEOUT_DOMINATED_FRACTION
        for s in result.shots
    ):
        raise RunError("timeout-dominated shot inside sweep (raise t_max_us)")
    return EXIT_OK


def _cmd_focal_scan(args) -> int:
    config = _load(args)
    from .analysis import focal_length
    from .beam import speed_from_energy

    l_f = float(focal_length(speed_from_energy(config.energy_ev), config.b0))
    zmax = (args.zmax_cm * 1e-2) if args.zmax_cm else 3.1 * l_f
    step = args.zstep_mm * 1e-3
    planes = np.arange(0.0, zmax + 0.5 * step, step)
    profile = focal_profile(config, planes)
    out = args.out / "focal.csv"
    _write_csv(
        out,
        _provenance(config, "focal-scan"),
        ("z_m", "rms_radius_m"),
        profile,
    )
    (args.out / "effective_config.cfg").write_text(config.dump())
    finite = [(z, r) for z, r in profile if not math.isnan(r)]
    z_min, r_min = min(finite[1:], key=lambda zr: zr[1])
    print(f"focal length (closed form): {l_f:.4f} m")
    print(f"first envelope minimum near z = {z_min:.4f} m (rms {r_min:.3e} m)")
    print(f"wrote {out}")
    return EXIT_OK


_COMMANDS = {
    "analyze": _cmd_analyze,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "focal-scan": _cmd_focal_scan,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
