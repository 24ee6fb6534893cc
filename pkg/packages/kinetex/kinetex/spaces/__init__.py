from .norms import (
    HolderEstimate,
    KineticCylinder,
    NormReport,
    SpNormComponents,
    WeightSpec,
    anisotropic_holder_seminorm,
    holder_norm,
    initial_value_norm,
    kinetic_osc,
    sigma_weighted_norm,
    sp_norm_components,
    weighted_norm,
)

__all__ = [
    "HolderEstimate",
    "KineticCylinder",
    "NormReport",
    "SpNormComponents",
    "WeightSpec",
    "anisotropic_holder_seminorm",
    "holder_norm",
    "initial_value_norm",
    "kinetic_osc",
    "sigma_weighted_norm",
    "sp_norm_components",
    "weighted_norm",
]
