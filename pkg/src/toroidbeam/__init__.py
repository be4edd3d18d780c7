"""Classical electron-beam transport through a flux toroid.

Simulates an electron gun firing along a uniform axial magnetic guide
field, through the aperture of a flux-confining toroidal coil, onto a
negatively biased wire grid backed by a plate detector — and audits,
with closed-form beam optics, why flux-dependent plate-current
oscillations in such a setup are classical (magnetic refocusing on the
grid, aperture clipping, leakage-field sensitivity, secondary-electron
shuttling) rather than a macroscopic matter-wave interference effect.
"""

__version__ = "0.1.0"

from .analysis import (
    BeamFieldPoint,
    ConsistencyReport,
    consistency_report,
    cyclotron_frequency,
    de_broglie_wavelength,
    focal_length,
    fringe_shift,
    injection_larmor_radius,
    interference_order,
    larmor_radius,
    macro_wavelength,
)
from .apparatus import (
    Apparatus,
    SecondaryYieldParams,
    grid_interaction,
    secondary_emission,
    toroid_aperture_check,
)
from .beam import BeamSpec, sample_beam, speed_from_energy
from .config import RunConfig, load_config, parse_config
from .dynamics import analytic_helix, lorentz_step, propagate
from .errors import ConfigError, RunError
from .experiment import ShotResult, SweepResult, focal_profile, run_shot, sweep
from .fields import (
    FieldStack,
    PotentialProfile,
    ToroidFieldParams,
    electrode_field,
    toroid_contribution,
    uniform_axial_field,
)
from .particles import ParticleState, Species, Status, Trajectory

__all__ = [
    "__version__",
    "BeamFieldPoint",
    "ConsistencyReport",
    "consistency_report",
    "cyclotron_frequency",
    "de_broglie_wavelength",
    "focal_length",
    "fringe_shift",
    "injection_larmor_radius",
    "interference_order",
    "larmor_radius",
    "macro_wavelength",
    "Apparatus",
    "SecondaryYieldParams",
    "grid_interaction",
    "secondary_emission",
    "toroid_aperture_check",
    "BeamSpec",
    "sample_beam",
    "speed_from_energy",
    "RunConfig",
    "load_config",
    "parse_config",
    "analytic_helix",
    "lorentz_step",
    "propagate",
    "ConfigError",
    "RunError",
    "ShotResult",
    "SweepResult",
    "focal_profile",
    "run_shot",
    "sweep",
    "FieldStack",
    "PotentialProfile",
    "ToroidFieldParams",
    "electrode_field",
    "toroid_contribution",
    "uniform_axial_field",
    "ParticleState",
    "Species",
    "Status",
    "Trajectory",
]
