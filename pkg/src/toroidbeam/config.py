"""Run configuration: flat key=value schema with units in key names.

The file format is intentionally minimal and diff-friendly: one
``key = value`` per line, ``#`` comments, no sections. Unknown keys are
errors. Every key has a default, so an empty file is a valid, complete
configuration. ``source_potential_v`` defaults to minus the beam energy
(the gun's accelerating potential) and is resolved at load time so the
echoed configuration is fully explicit.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

from .apparatus import Apparatus, SecondaryYieldParams
from .beam import BeamSpec
from .dynamics import larmor_period
from .errors import ConfigFileError, ConfigInvariantError, ConfigParseError
from .fields import (
    FieldStack,
    ToroidFieldParams,
    electrode_field,
    toroid_contribution,
    uniform_axial_field,
)

__all__ = ["RunConfig", "load_config", "parse_config", "CONFIG_SCHEMA"]

# key -> (type, default); None default means "derived", resolved on load
CONFIG_SCHEMA: dict[str, tuple[type, object]] = {
    # beam
    "energy_ev": (float, 1200.0),
    "energy_spread_ev": (float, 0.0),
    "theta_max_deg": (float, 15.0),
    "spot_radius_mm": (float, 0.5),
    "particle_count": (int, 10_000),
    "seed": (int, 1),
    # guide field
    "b0_mt": (float, 2.70),
    # toroid
    "toroid_z_cm": (float, 13.5),
    "toroid_inner_diameter_cm": (float, 2.6),
    "toroid_offset_mm": (float, 0.0),
    "toroid_perturbation": (float, 0.25),
    "toroid_perturbation_width_cm": (float, 1.0),
    "toroid_leakage_epsilon": (float, 0.0),
    "toroid_current_a": (float, 0.0),
    "toroid_core_field_per_amp_t": (float, 0.01),
    "toroid_core_area_cm2": (float, 0.785),
    "toroid_leakage_azimuth_deg": (float, 90.0),
    # geometry
    "l_cm": (float, 27.0),
    "grid_plate_gap_cm": (float, 1.5),
    "grid_pitch_mm": (float, 1.0),
    "grid_wire_radius_mm": (float, 0.1),
    "grid_orientation": (str, "x"),
    "chamber_radius_cm": (float, 5.0),
    # potentials
    "source_potential_v": (float, None),
    "source_ramp_cm": (float, 1.0),
    "grid_bias_v": (float, -5.0),
    "grid_ramp_mm": (float, 2.0),
    "plate_potential_v": (float, 0.0),
    # dynamics
    "dt_divisor": (int, 200),
    "t_max_us": (float, 2.0),
    # secondaries
    "secondary_yield": (float, 1.0),
    "secondary_energy_ev": (float, 3.0),
    # output
    "trajectory_stride": (int, 0),
    "trajectory_count": (int, 1),
}


@dataclass(frozen=True)
class RunConfig:
    energy_ev: float = 1200.0
    energy_spread_ev: float = 0.0
    theta_max_deg: float = 15.0
    spot_radius_mm: float = 0.5
    particle_count: int = 10_000
    seed: int = 1
    b0_mt: float = 2.70
    toroid_z_cm: float = 13.5
    toroid_inner_diameter_cm: float = 2.6
    toroid_offset_mm: float = 0.0
    toroid_perturbation: float = 0.25
    toroid_perturbation_width_cm: float = 1.0
    toroid_leakage_epsilon: float = 0.0
    toroid_current_a: float = 0.0
    toroid_core_field_per_amp_t: float = 0.01
    toroid_core_area_cm2: float = 0.785
    toroid_leakage_azimuth_deg: float = 90.0
    l_cm: float = 27.0
    grid_plate_gap_cm: float = 1.5
    grid_pitch_mm: float = 1.0
    grid_wire_radius_mm: float = 0.1
    grid_orientation: str = "x"
    chamber_radius_cm: float = 5.0
    source_potential_v: float | None = None
    source_ramp_cm: float = 1.0
    grid_bias_v: float = -5.0
    grid_ramp_mm: float = 2.0
    plate_potential_v: float = 0.0
    dt_divisor: int = 200
    t_max_us: float = 2.0
    secondary_yield: float = 1.0
    secondary_energy_ev: float = 3.0
    trajectory_stride: int = 0
    trajectory_count: int = 1

    def __post_init__(self) -> None:
        if self.source_potential_v is None:
            # gun accelerating potential: the beam energy in volts
            object.__setattr__(self, "source_potential_v", -float(self.energy_ev))

    # --- validation -------------------------------------------------

    def validated(self) -> "RunConfig":
        """Check cross-field invariants; error messages name the keys."""
        def require(cond: bool, message: str) -> None:
            if not cond:
                raise ConfigInvariantError(message)

        require(self.energy_ev > 0.0, "energy_ev must be > 0")
        require(self.energy_spread_ev >= 0.0, "energy_spread_ev must be >= 0")
        require(
            0.0 <= self.theta_max_deg < 90.0, "theta_max_deg must lie in [0, 90)"
        )
        require(self.spot_radius_mm >= 0.0, "spot_radius_mm must be >= 0")
        require(self.particle_count >= 1, "particle_count must be >= 1")
        require(self.b0_mt > 0.0, "b0_mt must be > 0")
        require(self.l_cm > 0.0, "l_cm must be > 0")
        require(
            0.0 < self.toroid_z_cm < self.l_cm,
            "toroid_z_cm must satisfy 0 < toroid_z_cm < l_cm",
        )
        require(self.toroid_inner_diameter_cm > 0.0, "toroid_inner_diameter_cm must be > 0")
        require(
            abs(self.toroid_perturbation) <= 1.0,
            "toroid_perturbation must satisfy |a| <= 1",
        )
        require(
            self.toroid_perturbation_width_cm > 0.0,
            "toroid_perturbation_width_cm must be > 0",
        )
        require(self.toroid_leakage_epsilon >= 0.0, "toroid_leakage_epsilon must be >= 0")
        require(self.toroid_core_area_cm2 > 0.0, "toroid_core_area_cm2 must be > 0")
        require(self.grid_plate_gap_cm > 0.0, "grid_plate_gap_cm must be > 0")
        require(
            self.grid_pitch_mm > 2.0 * self.grid_wire_radius_mm,
            "grid_pitch_mm must exceed twice grid_wire_radius_mm",
        )
        require(self.grid_wire_radius_mm >= 0.0, "grid_wire_radius_mm must be >= 0")
        require(
            self.grid_orientation in ("x", "y"),
            "grid_orientation must be 'x' or 'y'",
        )
        require(
            self.chamber_radius_cm > self.toroid_inner_diameter_cm / 2.0,
            "chamber_radius_cm must exceed half of toroid_inner_diameter_cm",
        )
        require(self.source_ramp_cm > 0.0, "source_ramp_cm must be > 0")
        require(self.grid_ramp_mm > 0.0, "grid_ramp_mm must be > 0")
        require(
            self.source_ramp_cm < self.l_cm - self.grid_ramp_mm / 10.0,
            "source_ramp_cm must end before the grid ramp begins "
            "(check source_ramp_cm, l_cm, grid_ramp_mm)",
        )
        require(
            self.grid_ramp_mm / 10.0 <= self.grid_plate_gap_cm,
            "grid_ramp_mm must fit inside grid_plate_gap_cm",
        )
        require(
            self.dt_divisor >= 50,
            "dt_divisor must be >= 50 (the step must resolve the gyration period)",
        )
        require(self.t_max_us > 0.0, "t_max_us must be > 0")
        require(self.secondary_yield >= 0.0, "secondary_yield must be >= 0")
        require(self.secondary_energy_ev > 0.0, "secondary_energy_ev must be > 0")
        require(self.trajectory_stride >= 0, "trajectory_stride must be >= 0")
        require(self.trajectory_count >= 0, "trajectory_count must be >= 0")
        return self

    def with_updates(self, **updates) -> "RunConfig":
        unknown = set(updates) - set(CONFIG_SCHEMA)
        if unknown:
            raise ConfigParseError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **updates)

    # --- SI conversions and object builders -------------------------

    @property
    def b0(self) -> float:
        return self.b0_mt * 1e-3

    def beam_spec(self) -> BeamSpec:
        return BeamSpec(
            kinetic_energy=self.energy_ev,
            energy_spread=self.energy_spread_ev,
            theta_max=math.radians(self.theta_max_deg),
            spot_radius=self.spot_radius_mm * 1e-3,
            count=self.particle_count,
            seed=self.seed,
        )

    def toroid_params(self) -> ToroidFieldParams:
        return ToroidFieldParams(
            z_center=self.toroid_z_cm * 1e-2,
            core_perturbation_amplitude=self.toroid_perturbation,
            perturbation_width=self.toroid_perturbation_width_cm * 1e-2,
            leakage_coefficient=self.toroid_leakage_epsilon,
            toroid_current=self.toroid_current_a,
            core_field_per_ampere=self.toroid_core_field_per_amp_t,
            core_area=self.toroid_core_area_cm2 * 1e-4,
            leakage_azimuth=math.radians(self.toroid_leakage_azimuth_deg),
        )

    def apparatus(self) -> Apparatus:
        return Apparatus(
            source_to_grid=self.l_cm * 1e-2,
            grid_plate_gap=self.grid_plate_gap_cm * 1e-2,
            toroid_z=self.toroid_z_cm * 1e-2,
            toroid_inner_diameter=self.toroid_inner_diameter_cm * 1e-2,
            toroid_offset=self.toroid_offset_mm * 1e-3,
            toroid_params=self.toroid_params(),
            grid_pitch=self.grid_pitch_mm * 1e-3,
            wire_radius=self.grid_wire_radius_mm * 1e-3,
            grid_orientation=self.grid_orientation,
            chamber_radius=self.chamber_radius_cm * 1e-2,
            source_potential=float(self.source_potential_v),
            source_ramp=self.source_ramp_cm * 1e-2,
            grid_bias=self.grid_bias_v,
            grid_ramp=self.grid_ramp_mm * 1e-3,
            plate_potential=self.plate_potential_v,
        )

    def field_stack(self) -> FieldStack:
        apparatus = self.apparatus()
        return FieldStack(
            (
                uniform_axial_field(self.b0),
                toroid_contribution(self.toroid_params(), self.b0),
                electrode_field(apparatus.potential_profile()),
            )
        )

    def guide_stack(self) -> FieldStack:
        return FieldStack((uniform_axial_field(self.b0),))

    def secondary_params(self) -> SecondaryYieldParams:
        return SecondaryYieldParams(
            yield_0=self.secondary_yield,
            emission_energy_mean=self.secondary_energy_ev,
        )

    def dt(self) -> float:
        return larmor_period(self.b0) / self.dt_divisor

    def t_max(self) -> float:
        return self.t_max_us * 1e-6

    # --- serialization ----------------------------------------------

    def dump(self) -> str:
        """Canonical text form; schema order, one key per line."""
        lines = []
        for key in CONFIG_SCHEMA:
            value = getattr(self, key)
            lines.append(f"{key} = {value!r}" if isinstance(value, str) else f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()


def _coerce(key: str, raw: str):
    kind, _default = CONFIG_SCHEMA[key]
    if kind is str:
        return raw.strip().strip("'\"")
    try:
        if kind is int:
            as_float = float(raw)
            as_int = int(as_float)
            if as_int != as_float:
                raise ValueError
            return as_int
        return float(raw)
    except ValueError:
        raise ConfigParseError(
            f"config key {key!r}: cannot parse {raw!r} as {kind.__name__}"
        ) from None


def parse_config(text: str) -> RunConfig:
    """Parse flat key=value text into a RunConfig with defaults applied."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigParseError(
                f"line {lineno}: expected 'key = value', got {line.strip()!r}"
            )
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in CONFIG_SCHEMA:
            raise ConfigParseError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigParseError(f"line {lineno}: duplicate config key {key!r}")
        values[key] = _coerce(key, raw)
    return RunConfig(**values)


def load_config(path: str | Path) -> RunConfig:
    """Load, default-fill and validate a configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigFileError(f"config file not found: {path}")
    config = parse_config(path.read_text())
    return config.validated()
