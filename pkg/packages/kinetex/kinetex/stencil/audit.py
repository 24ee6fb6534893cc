"""
Stencil audits: reconstruction over random elliptic matrices, exactness of
A_h on quadratics, and the measured consistency order of A_h against
div(a grad phi).
"""

from __future__ import annotations

import time
from typing import Sequence

import numpy as np
from loguru import logger

from ..checks import CheckResult
from ..velocity.grid import GridField, VelocityGrid
from ..velocity.operators import apply_ah
from .decomposition import (
    SymMatrix3,
    decompose,
    decompose_field,
    default_stencil,
    monotonicity_report,
    reconstruct,
)


def random_sym(rng: np.random.Generator, delta: float) -> SymMatrix3:
    """Random matrix with eigenvalues strictly inside [delta, 1/delta]."""
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    eig = rng.uniform(delta * 1.01, 0.99 / delta, size=3)
    a = q @ np.diag(eig) @ q.T
    return SymMatrix3(0.5 * (a + a.T))


def reconstruction_errors(samples: int, delta: float, rng: np.random.Generator) -> dict:
    errors = np.empty(samples)
    min_pair = np.inf
    non_monotone = 0
    for k in range(samples):
        a = random_sym(rng, delta)
        d = decompose(a, delta=delta)
        errors[k] = np.max(np.abs(reconstruct(d).entries - a.entries))
        report = monotonicity_report(d)
        min_pair = min(min_pair, report.min_pair_weight)
        non_monotone += int(not report.monotone)
    return {
        "max_error": float(errors.max()) if samples else 0.0,
        "min_pair_weight": float(min_pair),
        "non_monotone": non_monotone,
    }


def _consistency_coefficient(v: np.ndarray) -> np.ndarray:
    a = np.zeros(v.shape[:-1] + (3, 3))
    diag = 1.0 + 0.3 * np.sin(v[..., 0])
    for i in range(3):
        a[..., i, i] = diag
    a[..., 0, 1] = a[..., 1, 0] = 0.2
    return a


def _consistency_oracle(v: np.ndarray) -> np.ndarray:
    r2 = np.sum(v**2, axis=-1)
    phi = np.exp(-r2)
    return (
        0.3 * np.cos(v[..., 0]) * (-2.0 * v[..., 0] * phi)
        + (1.0 + 0.3 * np.sin(v[..., 0])) * (4.0 * r2 - 6.0) * phi
        + 0.4 * 4.0 * v[..., 0] * v[..., 1] * phi
    )


def consistency_error(spacing: float, half_width: float = 2.0, delta1: float = 0.0625) -> float:
    """Interior sup-error of A_h phi against div(a grad phi) for a smooth variable a."""
    grid = VelocityGrid.from_spacing(spacing, half_width)
    v = grid.mesh()
    weights = decompose_field(_consistency_coefficient(v), delta1)
    phi = GridField(grid, np.exp(-np.sum(v**2, axis=-1)))
    ah = apply_ah(phi, list(weights), default_stencil())
    mask = grid.interior_mask(1)
    return float(np.max(np.abs(ah.values - _consistency_oracle(v))[mask]))


def consistency_order(spacings: Sequence[float] = (0.4, 0.2, 0.1)) -> tuple[float, list[float]]:
    errors = [consistency_error(h) for h in spacings]
    orders = [
        np.log(errors[k] / errors[k + 1]) / np.log(spacings[k] / spacings[k + 1])
        for k in range(len(spacings) - 1)
    ]
    return float(min(orders)), errors


def quadratic_exactness_error(half_width: float = 2.0, n: int = 9) -> float:
    grid = VelocityGrid(half_width, n)
    a = SymMatrix3.from_upper(1.0, 0.9, 1.2, 0.2, -0.1, 0.15)
    d = decompose(a, delta=0.5)
    m = np.array([[0.5, 0.3, -0.2], [0.3, -0.4, 0.1], [-0.2, 0.1, 0.7]])
    v = grid.mesh()
    u = GridField(grid, np.einsum("...i,ij,...j->...", v, m, v))
    ah = apply_ah(u, list(d.weights), d.dirs)
    expected = 2.0 * np.sum(a.entries * m)
    return float(np.max(np.abs(ah.values - expected)[grid.interior_mask(1)]))


def run_stencil_audit(
    samples: int = 1000,
    delta: float = 0.2,
    rng: np.random.Generator | None = None,
    consistency_spacings: Sequence[float] = (0.4, 0.2, 0.1),
) -> list[CheckResult]:
    rng = rng if rng is not None else np.random.default_rng(0)
    start = time.perf_counter()
    recon = reconstruction_errors(samples, delta, rng)
    elapsed = time.perf_counter() - start
    logger.info(
        "Reconstructed {samples} matrices in {elapsed:.2f}s, max error {err:.2e}",
        samples=samples,
        elapsed=elapsed,
        err=recon["max_error"],
    )
    order, errors = consistency_order(consistency_spacings)
    return [
        CheckResult(
            "stencil.reconstruction",
            recon["max_error"],
            1e-12,
            "stencil.decompose/reconstruct",
            details={**recon, "samples": samples, "delta": delta},
        ),
        CheckResult(
            "stencil.pair_weight_floor",
            recon["min_pair_weight"],
            delta / 8.0 - 1e-15,
            "stencil.decompose",
            comparison="ge",
        ),
        CheckResult(
            "velocity.ah_quadratic_exactness",
            quadratic_exactness_error(),
            1e-11,
            "velocity.apply_ah",
        ),
        CheckResult(
            "velocity.ah_consistency_order",
            order,
            0.9,
            "velocity.apply_ah",
            comparison="ge",
            details={"spacings": list(consistency_spacings), "errors": errors},
        ),
    ]
