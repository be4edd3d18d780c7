"""Physical constants (SI) used throughout the package.

All internal math is SI; interfaces convert from eV / mT / cm / mm as
needed. Values come from scipy.constants (CODATA).
"""

import scipy.constants as _sc

ELEM_CHARGE = _sc.e            # C, positive elementary charge
ELECTRON_CHARGE = -_sc.e       # C, signed electron charge
ELECTRON_MASS = _sc.m_e        # kg
SPEED_OF_LIGHT = _sc.c         # m/s
PLANCK = _sc.h                 # J s

EV = _sc.e                     # J per eV

# charge-to-mass ratio of the electron, signed (C/kg)
ELECTRON_QM = ELECTRON_CHARGE / ELECTRON_MASS
