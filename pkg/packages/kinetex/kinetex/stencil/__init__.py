from .audit import run_stencil_audit
from .decomposition import (
    MonotonicityReport,
    StencilDecomposition,
    SymMatrix3,
    decompose,
    decompose_field,
    decomposition_from_json,
    decomposition_to_json,
    default_stencil,
    monotonicity_report,
    reconstruct,
)

__all__ = [
    "MonotonicityReport",
    "StencilDecomposition",
    "SymMatrix3",
    "decompose",
    "decompose_field",
    "decomposition_from_json",
    "decomposition_to_json",
    "default_stencil",
    "monotonicity_report",
    "reconstruct",
    "run_stencil_audit",
]
