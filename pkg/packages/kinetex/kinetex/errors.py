"""
Error hierarchy shared by every kinetex module.

Each error carries the name of the module that raised it so the command-line
runner can print module-qualified messages without parsing tracebacks.
"""

from __future__ import annotations


class KinetexError(Exception):
    """Base class for all kinetex errors."""

    module: str = "kinetex"

    def __init__(self, message: str, *, module: str | None = None) -> None:
        super().__init__(message)
        if module is not None:
            self.module = module

    def qualified(self) -> str:
        return f"[{self.module}] {self}"


class ConfigurationError(KinetexError, ValueError):
    """Invalid parameter value (step not a lattice multiple, delta1 out of range, ...)."""


class StructuralError(KinetexError, ValueError):
    """Mismatched grids, list lengths or array shapes."""


class EllipticityError(KinetexError, ValueError):
    """Matrix outside Sym(delta)."""


class ChartSingularityError(KinetexError, ArithmeticError):
    """det M <= 0 or the inverse chart map failed to converge."""


class ChartRangeError(KinetexError, ValueError):
    """Point outside the chart radius."""


class NormalizationError(KinetexError, ValueError):
    """Reflection normal is not a unit vector."""


class SingularityError(KinetexError, ArithmeticError):
    """Kernel evaluated at its singular point."""


class PreconditionError(KinetexError, ValueError):
    """Required input is missing (gradient, time levels, ...)."""


class DataError(KinetexError, ValueError):
    """Tabulated data violates a structural property (for example sigma not PSD)."""


class StepSizeError(KinetexError, ValueError):
    """Time step incompatible with the transport or explicit collision scheme."""


class SolverError(KinetexError, RuntimeError):
    """Linear solver failed to converge."""


class DegenerateCylinderError(KinetexError, ValueError):
    """Kinetic cylinder with non-positive radius or empty sample."""
