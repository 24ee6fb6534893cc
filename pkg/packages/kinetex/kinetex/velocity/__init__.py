"""
Velocity lattice, fields and finite-difference operators.

Usage:
    from kinetex.velocity import VelocityGrid, GridField, apply_ah

    grid = VelocityGrid(half_width=4.0, n=17)
    u = GridField.from_function(grid, lambda v1, v2, v3: v1**2 + v2**2 + v3**2)
"""

from .grid import ExteriorPolicy, GridField, VelocityGrid
from .io import load_field, load_table, save_field, save_table
from .operators import (
    StencilDirection,
    apply_ah,
    as_direction,
    assemble_ah,
    assemble_drift,
    central_gradient,
    first_diff,
    gradient_array,
    interior_bond_mask,
    second_diff,
    shift,
    shift_array,
    truncation_outflow,
)

__all__ = [
    "ExteriorPolicy",
    "GridField",
    "VelocityGrid",
    "StencilDirection",
    "apply_ah",
    "as_direction",
    "assemble_ah",
    "assemble_drift",
    "central_gradient",
    "first_diff",
    "gradient_array",
    "interior_bond_mask",
    "second_diff",
    "shift",
    "shift_array",
    "truncation_outflow",
    "load_field",
    "load_table",
    "save_field",
    "save_table",
]
