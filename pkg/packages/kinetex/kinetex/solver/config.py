"""
Slab solver defaults.
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Relative residual for the per-cell collision solves
CG_RTOL = float(os.getenv("KINETEX_CG_RTOL", "1e-10"))

# Iteration cap per solve, in multiples of the unknown count
CG_MAXITER_FACTOR = 10

# A characteristic may reflect this many times within one step
MAX_BOUNCES = 8

DEFAULT_CLOSURE = "no_flux"

# Energy and max-principle audits pass below this multiple of the state scale
AUDIT_RTOL = 1e-8

# Landau-mode energy audit: E_n + c S_n <= C (E_0 + G_n)
LANDAU_AUDIT_C = 1.0
LANDAU_AUDIT_BOUND = 4.0

# Geometric lambda search
LAMBDA_START = 0.01
LAMBDA_FACTOR = 2.0
LAMBDA_MAX_ATTEMPTS = 24

# Relative spread of fitted Landau audit constants tolerated across a sweep
SWEEP_CONSTANT_SPREAD = 0.2

DIAGNOSTIC_COLUMNS = (
    "t",
    "E_theta",
    "dissipation",
    "linf",
    "mass",
    "flux_plus",
    "flux_minus",
    "trunc_flux",
    "energy_residual",
    "maxprin_residual",
)
