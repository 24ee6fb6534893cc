"""
Landau kernel, Maxwellian and the linearized-operator coefficient tables.

Usage:
    from kinetex.landau import build_coefficients, apply_kbar

    coeffs = build_coefficients(grid)          # g = 0
    out = apply_kbar(coeffs, f, central_gradient(f))
"""

from .coefficients import (
    HolderModulusReport,
    KForm,
    LandauCoefficientSet,
    annulus_decay,
    apply_k,
    apply_kbar,
    build_coefficients,
    compute_sigma,
    compute_sigma_g_and_ag,
    cube_group,
    equivariance_residual,
    export_tables,
    fit_sigma_bounds,
    maxwellian,
    sigma_holder_modulus,
)
from .kernel import (
    CUBE_INVERSE_DISTANCE,
    kernel_divergence,
    kernel_divergence_table,
    kernel_phi,
    kernel_phi_table,
    maxwellian_values,
)
from .audit import run_landau_audit
from .quadrature import LatticeConvolver, QuadratureSpec, convolve_at

__all__ = [
    "CUBE_INVERSE_DISTANCE",
    "HolderModulusReport",
    "KForm",
    "LandauCoefficientSet",
    "LatticeConvolver",
    "QuadratureSpec",
    "annulus_decay",
    "apply_k",
    "apply_kbar",
    "build_coefficients",
    "compute_sigma",
    "compute_sigma_g_and_ag",
    "convolve_at",
    "cube_group",
    "equivariance_residual",
    "export_tables",
    "fit_sigma_bounds",
    "kernel_divergence",
    "kernel_divergence_table",
    "kernel_phi",
    "kernel_phi_table",
    "maxwellian",
    "maxwellian_values",
    "run_landau_audit",
    "sigma_holder_modulus",
]
