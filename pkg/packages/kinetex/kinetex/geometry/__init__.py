"""
Boundary-flattening charts, the mirror extension and their audits.

Usage:
    from kinetex.geometry import make_chart, chart_forward

    chart = make_chart("paraboloid", c1=0.3, c2=0.2)
    point = chart_forward(chart, x, v)
"""

from .audit import run_geometry_audit
from .charts import (
    R,
    BoundaryChart,
    ChartPoint,
    ExpressionChart,
    FlatChart,
    ParaboloidChart,
    RadialCutoff,
    SinusoidalChart,
    TransformedCoefficients,
    blend_cutoff,
    chart_forward,
    check_e0,
    check_e1,
    check_speed_invariance,
    check_specular_preservation,
    ellipticity_bound,
    extend_whole_space,
    fit_transport_bounds,
    flattened_coefficient,
    jacobian_matrix,
    make_chart,
    outward_normal,
    psi_inverse,
    specular_reflect,
    transform_coefficients,
)
from .mirror import (
    HalfSpaceField,
    continuity_probe,
    convolution_antisymmetry_check,
    mirror_extend,
)

__all__ = [
    "R",
    "BoundaryChart",
    "ChartPoint",
    "ExpressionChart",
    "FlatChart",
    "HalfSpaceField",
    "ParaboloidChart",
    "RadialCutoff",
    "SinusoidalChart",
    "TransformedCoefficients",
    "blend_cutoff",
    "chart_forward",
    "check_e0",
    "check_e1",
    "check_speed_invariance",
    "check_specular_preservation",
    "continuity_probe",
    "convolution_antisymmetry_check",
    "ellipticity_bound",
    "extend_whole_space",
    "fit_transport_bounds",
    "flattened_coefficient",
    "jacobian_matrix",
    "make_chart",
    "mirror_extend",
    "outward_normal",
    "psi_inverse",
    "run_geometry_audit",
    "specular_reflect",
    "transform_coefficients",
]
