"""
kinetex: numerics and audits for kinetic Fokker-Planck and linearized Landau equations.

Subpackages:
    velocity  - velocity lattice, fields, finite differences and A_h
    stencil   - stencil decomposition of symmetric matrices
    geometry  - boundary-flattening charts and mirror extension
    landau    - Landau kernel, sigma tables and the operator Kbar_g
    spaces    - weighted norms, Holder estimators, kinetic cylinders
    solver    - slab time stepping with per-step audits
"""

__version__ = "0.1.0"
