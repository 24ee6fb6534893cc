"""
Landau coefficient audit: sigma at the origin, cube-group equivariance,
fitted decay bounds, self-adjointness of K and linearity in g.
"""

from __future__ import annotations

import time

import numpy as np
from loguru import logger

from ..checks import CheckResult
from ..velocity import GridField, VelocityGrid, central_gradient
from . import config
from .coefficients import (
    apply_k,
    build_coefficients,
    compute_sigma,
    equivariance_residual,
    fit_sigma_bounds,
)
from .quadrature import QuadratureSpec


def smooth_pair(grid: VelocityGrid, rng: np.random.Generator) -> tuple[GridField, GridField]:
    """Two smooth rapidly decaying fields with random polynomial prefactors."""
    v = grid.mesh()
    decay = np.exp(-0.5 * grid.speed_squared())
    coeffs = rng.standard_normal((2, 4))
    fields = []
    for c in coeffs:
        poly = c[0] + c[1] * v[..., 0] + c[2] * v[..., 1] * v[..., 2] + c[3] * v[..., 2] ** 2
        fields.append(GridField(grid, poly * decay))
    return fields[0], fields[1]


def adjoint_defect(coeffs, f: GridField, phi: GridField, grad_f=None, grad_phi=None) -> float:
    """|<K f, phi> - <K phi, f>| / (||K f|| ||phi|| + ||K phi|| ||f||) in the discrete L2 pairing."""
    grad_f = central_gradient(f) if grad_f is None else grad_f
    grad_phi = central_gradient(phi) if grad_phi is None else grad_phi
    kf = apply_k(coeffs, f, grad_f).values
    kphi = apply_k(coeffs, phi, grad_phi).values
    lhs = float(np.sum(kf * phi.values))
    rhs = float(np.sum(kphi * f.values))
    scale = np.linalg.norm(kf) * np.linalg.norm(phi.values) + np.linalg.norm(kphi) * np.linalg.norm(f.values)
    return abs(lhs - rhs) / scale if scale > 0 else 0.0


def adjoint_gap(coeffs, pairs: list[tuple[GridField, GridField]]) -> float:
    """max |<K f, phi> - <K phi, f>| / (||f|| ||phi||) over the pairs."""
    worst = 0.0
    for f, phi in pairs:
        kf = apply_k(coeffs, f, central_gradient(f)).values
        kphi = apply_k(coeffs, phi, central_gradient(phi)).values
        gap = abs(float(np.sum(kf * phi.values)) - float(np.sum(kphi * f.values)))
        worst = max(worst, gap / (np.linalg.norm(f.values) * np.linalg.norm(phi.values)))
    return worst


def run_landau_audit(
    half_width: float = 2.0,
    n: int = 17,
    rng: np.random.Generator | None = None,
    quad: QuadratureSpec | None = None,
) -> list[CheckResult]:
    rng = rng if rng is not None else np.random.default_rng(0)
    grid = VelocityGrid(half_width, n)
    start = time.perf_counter()
    sigma, div_sigma, report = compute_sigma(grid, quad)
    bounds = fit_sigma_bounds(sigma, grid)
    logger.info(
        "Built sigma on n={n} in {elapsed:.2f}s (c1={c1:.3e}, c2={c2:.3e})",
        n=n,
        elapsed=time.perf_counter() - start,
        c1=bounds["c1"],
        c2=bounds["c2"],
    )

    c = grid.center_index
    origin_rel = float(np.max(np.abs(sigma[c, c, c] - config.SIGMA_ORIGIN * np.eye(3)))) / config.SIGMA_ORIGIN
    # second-order error with coefficient about 0.11 relative to sigma(0)
    origin_tol = max(0.25 * grid.spacing**2, 1e-3)

    f, phi = smooth_pair(grid, rng)
    symmetric = build_coefficients(grid, form="symmetric", sigma=(sigma, div_sigma, report))
    regularized = build_coefficients(grid, form="regularized", sigma=(sigma, div_sigma, report))

    g1, g2 = smooth_pair(grid, rng)
    g1, g2 = g1 * 0.01, g2 * 0.01
    pairs = [smooth_pair(grid, rng) for _ in range(config.ADJOINT_PAIRS)]
    pre = (sigma, div_sigma, report)
    sum_set = build_coefficients(grid, g1 + g2, sigma=pre)
    parts = [build_coefficients(grid, g, sigma=pre) for g in (g1, g2)]
    superposition = float(
        np.max(np.abs((sum_set.sigma_g - sigma) - (parts[0].sigma_g - sigma) - (parts[1].sigma_g - sigma)))
        + np.max(np.abs(sum_set.a_g - parts[0].a_g - parts[1].a_g))
    )

    return [
        CheckResult(
            "landau.sigma_origin",
            origin_rel,
            origin_tol,
            "landau.compute_sigma",
            details={"spacing": grid.spacing, **report},
        ),
        CheckResult(
            "landau.sigma_equivariance",
            equivariance_residual(sigma, grid),
            config.SYMMETRY_TOL,
            "landau.compute_sigma",
        ),
        CheckResult("landau.sigma_lower_bound", bounds["c1"], 0.0, "landau.fit_sigma_bounds", comparison="ge", details=bounds),
        CheckResult(
            "landau.k_self_adjoint",
            adjoint_gap(symmetric, pairs),
            config.ADJOINT_TOL,
            "landau.apply_k(symmetric)",
            details={"pairs": len(pairs), "default_form": "symmetric"},
        ),
        CheckResult(
            "landau.k_regularized_asymmetry",
            adjoint_defect(regularized, f, phi),
            0.1,
            "landau.apply_k(regularized)",
        ),
        CheckResult(
            "landau.jg_origin",
            abs(regularized.jg_multiplier[c, c, c] - np.trace(sigma[c, c, c])),
            config.SYMMETRY_TOL,
            "landau.build_coefficients",
        ),
        CheckResult("landau.linearity", superposition, config.LINEARITY_TOL, "landau.compute_sigma_g_and_ag"),
    ]
