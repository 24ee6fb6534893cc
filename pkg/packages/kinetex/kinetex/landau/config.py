"""
Quadrature and audit defaults for the Landau coefficient tables.
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Velocity margin added around the grid box when convolving against mu
QUAD_MARGIN = float(os.getenv("KINETEX_QUAD_MARGIN", "4.0"))
MIN_QUAD_MARGIN = 4.0

# Maxwellian mass allowed outside the extended quadrature box
TAIL_TOLERANCE = 1e-7

# sigma(0) = (4/3) pi^{-1/2} I
SIGMA_ORIGIN = 4.0 / (3.0 * 3.141592653589793**0.5)

SYMMETRY_TOL = 1e-10
LINEARITY_TOL = 1e-12

# |<K f, phi> - <K phi, f>| <= ADJOINT_TOL ||f|| ||phi|| over ADJOINT_PAIRS random smooth pairs
ADJOINT_TOL = 1e-6
ADJOINT_PAIRS = 20

# Holder exponent kappa used by sigma_holder_modulus when a caller passes none
HOLDER_KAPPA = 0.5

# Annulus radii for the decay fit of the nonlocal operator
ANNULUS_RADII = (1.0, 2.0, 4.0)
