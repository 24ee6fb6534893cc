"""
Package-wide numerical defaults.

Values marked with an environment variable can be overridden at process start
(`.env` files are honored through python-dotenv).
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Worker threads for per-cell collision solves and table construction
THREADS = int(os.getenv("KINETEX_THREADS", "1"))

# Geometric tolerance for unit normals and symmetry checks
UNIT_TOL = 1e-12

# Default reproducibility seed when a caller passes none
DEFAULT_SEED = 0
