"""Pass/fail records shared by every audit."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

from loguru import logger


@dataclass
class CheckResult:
    """One audited quantity with the tolerance it was held to.

    `comparison` is "le" when the check passes for value <= tolerance and
    "ge" when it passes for value >= tolerance.
    """

    name: str
    value: float
    tolerance: float
    provenance: str
    comparison: str = "le"
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        if self.comparison == "ge":
            return self.value >= self.tolerance
        return self.value <= self.tolerance

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def log_checks(checks: list[CheckResult]) -> bool:
    """Log every check and return True when all passed."""
    ok = True
    for check in checks:
        if check.passed:
            logger.info(
                "check {name} passed: {value:.3e} ({cmp} {tol:.3e})",
                name=check.name,
                value=check.value,
                cmp=check.comparison,
                tol=check.tolerance,
            )
        else:
            ok = False
            logger.warning(
                "check {name} FAILED: {value:.3e} (required {cmp} {tol:.3e}) from {src}",
                name=check.name,
                value=check.value,
                cmp=check.comparison,
                tol=check.tolerance,
                src=check.provenance,
            )
    return ok
