"""
Batch audit of the boundary identities for chart presets.
"""

from __future__ import annotations

import time
from typing import Sequence

import numpy as np
from loguru import logger

from ..checks import CheckResult
from . import config
from .charts import (
    BoundaryChart,
    ChartPoint,
    FlatChart,
    chart_forward,
    check_e0,
    check_e1,
    check_speed_invariance,
    check_specular_preservation,
    ellipticity_bound,
    extend_whole_space,
    flattened_coefficient,
    make_chart,
    psi_inverse,
    sample_boundary_points,
    transform_coefficients,
)
from .mirror import (
    continuity_probe,
    convolution_antisymmetry_check,
    maxwellian_profile,
    odd_control_profile,
)

DEFAULT_PRESETS = ("flat", "paraboloid", "sinusoidal")
CONTROL_W = np.array([0.3, -0.2, 0.5])


def round_trip_error(chart: BoundaryChart, count: int, rng: np.random.Generator) -> float:
    """max |psi(psi^{-1}(y)) - y| over interior chart points."""
    y12, w = sample_boundary_points(chart, count, rng)
    depth = -0.3 * chart.radius * rng.random(count)
    y = np.concatenate([y12, depth[:, None]], axis=-1)
    point = chart_forward(chart, psi_inverse(chart, y), w)
    return float(np.max(np.linalg.norm(point.y - y, axis=-1)))


def ellipticity_margin(
    chart: BoundaryChart, count: int, rng: np.random.Generator, delta: float = 0.25
) -> float:
    """min over samples of eigmin(A) - delta' for random a in Sym(delta); >= 0 expected."""
    y12, w = sample_boundary_points(chart, count, rng)
    depth = -0.3 * chart.radius * rng.random(count)
    y = np.concatenate([y12, depth[:, None]], axis=-1)
    q, _ = np.linalg.qr(rng.standard_normal((count, 3, 3)))
    eig = rng.uniform(delta, 1.0 / delta, size=(count, 3))
    a = np.einsum("nij,nj,nkj->nik", q, eig, q)
    coeffs = transform_coefficients(chart, a, None, ChartPoint(y=y, w=w))
    lam = np.linalg.eigvalsh(coeffs.A)
    bound = ellipticity_bound(chart, y, delta)
    return float(np.min(np.minimum(lam[..., 0] - bound, 1.0 / bound - lam[..., -1])))


def _preset_checks(
    name: str, chart: BoundaryChart, samples: int, rng: np.random.Generator, include_e3: bool
) -> list[CheckResult]:
    y12, w = sample_boundary_points(chart, samples, rng)
    src = f"geometry.{name}"
    checks = [
        CheckResult(
            f"{src}.specular_preservation",
            float(np.max(check_specular_preservation(chart, y12, w))),
            config.SPECULAR_TOL,
            "geometry.check_specular_preservation",
        ),
        CheckResult(f"{src}.e0", float(np.max(check_e0(chart, y12))), config.E0_TOL, "geometry.check_e0"),
        CheckResult(f"{src}.e1", float(np.max(check_e1(chart, y12))), config.E1_TOL, "geometry.check_e1"),
        CheckResult(
            f"{src}.speed_invariance",
            float(np.max(check_speed_invariance(chart, y12, w))),
            config.E5_TOL,
            "geometry.check_speed_invariance",
        ),
        CheckResult(
            f"{src}.round_trip",
            round_trip_error(chart, samples, rng),
            config.ROUND_TRIP_TOL,
            "geometry.chart_forward",
        ),
        CheckResult(
            f"{src}.ellipticity_margin",
            ellipticity_margin(chart, samples, rng),
            -1e-12,
            "geometry.ellipticity_bound",
            comparison="ge",
        ),
    ]

    coefficient = flattened_coefficient(chart, np.eye(3), delta=0.5)
    extended = lambda y, w: extend_whole_space(coefficient, "matrix_a", y, w)  # noqa: E731
    jump = continuity_probe(extended, samples, rng, chart=chart)
    checks.append(
        CheckResult(
            f"{src}.flattened_continuity",
            jump.max_jump,
            config.CONTINUITY_TOL,
            "mirror.continuity_probe",
            details=jump.to_dict(),
        )
    )

    if include_e3:
        point = y12[0]
        even = convolution_antisymmetry_check(chart, maxwellian_profile(chart, point), point, CONTROL_W)
        odd = convolution_antisymmetry_check(chart, odd_control_profile(chart, point), point, CONTROL_W)
        checks.append(
            CheckResult(
                f"{src}.e3_antisymmetry",
                even.residual,
                even.tolerance,
                "mirror.convolution_antisymmetry_check",
                details=even.to_record(),
            )
        )
        control_floor = 10.0 * max(odd.quad_error_estimate, config.E3_FLOOR)
        checks.append(
            CheckResult(
                f"{src}.e3_control_detected",
                odd.residual,
                control_floor,
                "mirror.convolution_antisymmetry_check",
                comparison="ge",
                details=odd.to_record(),
            )
        )
    return checks


def broken_control_jump(samples: int, rng: np.random.Generator) -> float:
    """Jump of a flat-chart coefficient with A^13 = 0.3, which violates the boundary identity."""
    chart = FlatChart()
    broken = np.eye(3)
    broken[0, 2] = broken[2, 0] = 0.3

    def field(y, w):
        return np.broadcast_to(broken, np.asarray(y).shape[:-1] + (3, 3))

    extended = lambda y, w: extend_whole_space(field, "matrix_a", y, w)  # noqa: E731
    return continuity_probe(extended, samples, rng, chart=chart).max_jump


def run_geometry_audit(
    presets: Sequence[str] = DEFAULT_PRESETS,
    samples: int = 1000,
    rng: np.random.Generator | None = None,
    include_e3: bool = True,
    preset_params: dict[str, dict] | None = None,
) -> list[CheckResult]:
    rng = rng if rng is not None else np.random.default_rng(0)
    preset_params = preset_params or {}
    checks: list[CheckResult] = []
    for name in presets:
        start = time.perf_counter()
        chart = make_chart(name, **preset_params.get(name, {}))
        checks += _preset_checks(name, chart, samples, rng, include_e3)
        logger.info(
            "Audited chart {name} with {samples} samples in {elapsed:.2f}s",
            name=name,
            samples=samples,
            elapsed=time.perf_counter() - start,
        )
    checks.append(
        CheckResult(
            "geometry.broken_control_jump",
            broken_control_jump(samples, rng),
            config.BROKEN_CONTROL_MIN_JUMP,
            "mirror.continuity_probe",
            comparison="ge",
        )
    )
    return checks
