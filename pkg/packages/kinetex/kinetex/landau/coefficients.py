"""
Coefficient tables of the linearized Landau operator around the Maxwellian:

    sigma     = Phi * mu
    sigma_G   = sigma + Phi * (mu^{1/2} g)
    a_g^i     = -Phi^{ij} * (v_j mu^{1/2} g + mu^{1/2} d_j g)

and the bounded nonlocal part Kbar_g = K + J_g, with J_g a pointwise
multiplier and K = K1 + K2 + K3.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from loguru import logger

from ..errors import DataError, PreconditionError, StructuralError
from ..velocity import GridField, VelocityGrid, central_gradient, gradient_array, save_table
from . import config
from .kernel import full_to_sym, maxwellian_values
from .quadrature import LatticeConvolver, QuadratureSpec, padded_maxwellian, padded_mesh

KForm = Literal["regularized", "symmetric"]


def maxwellian(grid: VelocityGrid) -> GridField:
    return GridField(grid, maxwellian_values(grid.mesh()))


def compute_sigma(
    grid: VelocityGrid, quad: QuadratureSpec | None = None
) -> tuple[np.ndarray, np.ndarray, dict]:
    """sigma and its divergence d_i sigma^{ij} on the grid nodes.

    The divergence is the convolution of Phi with the exact derivative
    d_i mu = -2 v_i mu on the padded lattice.
    Returns (sigma (n,n,n,3,3), div_sigma (n,n,n,3), quadrature report).
    """
    quad = quad or QuadratureSpec()
    tail = quad.check_tail(grid)
    m = quad.margin_nodes(grid)
    conv = LatticeConvolver.padded(grid, m)
    mu = padded_maxwellian(grid, m)
    sigma = conv.phi_scalar(mu)
    sigma = 0.5 * (sigma + np.swapaxes(sigma, -1, -2))
    div_sigma = conv.phi_vector(-2.0 * padded_mesh(grid, m) * mu[..., None])
    c = grid.center_index
    origin_error = float(np.max(np.abs(sigma[c, c, c] - config.SIGMA_ORIGIN * np.eye(3))))
    logger.debug(
        "sigma on n={n} h={h:.4f} (margin nodes {m}): origin error {e:.2e}",
        n=grid.n,
        h=grid.spacing,
        m=m,
        e=origin_error,
    )
    return sigma, div_sigma, {"tail_mass": tail, "margin_nodes": m, "origin_error": origin_error}


def _sqrt_mu(grid: VelocityGrid) -> np.ndarray:
    return np.sqrt(maxwellian_values(grid.mesh()))


def _gradient_of(u: GridField, grad: np.ndarray | None) -> np.ndarray:
    if grad is None:
        return central_gradient(u)
    grad = np.asarray(grad, dtype=float)
    if grad.shape != u.grid.shape + (3,):
        raise StructuralError(
            f"gradient shape {grad.shape} does not match grid {u.grid.shape}", module="landau"
        )
    return grad


def compute_sigma_g_and_ag(
    grid: VelocityGrid,
    g: GridField,
    grad_g: np.ndarray | None = None,
    quad: QuadratureSpec | None = None,
    sigma: np.ndarray | None = None,
    conv: LatticeConvolver | None = None,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """sigma_G and a_g for a frozen perturbation g (centered differences when grad_g is None)."""
    if g.grid != grid:
        raise StructuralError("g lives on a different grid", module="landau")
    if sigma is None:
        sigma, _, _ = compute_sigma(grid, quad)
    conv = conv or LatticeConvolver.on_grid(grid)
    grad = _gradient_of(g, grad_g)
    sqrt_mu = _sqrt_mu(grid)
    v = grid.mesh()
    sigma_g = sigma + conv.phi_scalar(sqrt_mu * g.values)
    sigma_g = 0.5 * (sigma_g + np.swapaxes(sigma_g, -1, -2))
    a_g = -conv.phi_vector(v * (sqrt_mu * g.values)[..., None] + sqrt_mu[..., None] * grad)

    h = grid.spacing
    eig = np.linalg.eigvalsh(sigma_g)
    report = {
        "g_sup": float(np.max(np.abs(g.values))),
        "a_g_max": float(np.max(np.linalg.norm(a_g, axis=-1))),
        "grad_a_g_max": float(np.max(np.abs(gradient_array(a_g, h)))),
        "grad_sigma_g_max": float(np.max(np.abs(gradient_array(sigma_g, h)))),
        "sigma_g_eigmin": float(eig[..., 0].min()),
    }
    if report["sigma_g_eigmin"] <= 0:
        logger.warning(
            "sigma_G loses positive definiteness (eigmin {e:.3e}, |g|_inf {g:.3e})",
            e=report["sigma_g_eigmin"],
            g=report["g_sup"],
        )
    return sigma_g, a_g, report


@dataclass
class LandauCoefficientSet:
    """Tabulated coefficients for a frozen g, plus the J_g multiplier."""

    grid: VelocityGrid
    sigma: np.ndarray
    div_sigma: np.ndarray
    sigma_g: np.ndarray
    a_g: np.ndarray
    g: GridField
    grad_g: np.ndarray
    jg_multiplier: np.ndarray
    quadrature: dict = field(default_factory=dict)
    form: KForm = "symmetric"
    convolver: LatticeConvolver | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.convolver is None:
            self.convolver = LatticeConvolver.on_grid(self.grid)


def build_coefficients(
    grid: VelocityGrid,
    g: GridField | None = None,
    grad_g: np.ndarray | None = None,
    quad: QuadratureSpec | None = None,
    form: KForm = "symmetric",
    sigma: tuple[np.ndarray, np.ndarray, dict] | None = None,
) -> LandauCoefficientSet:
    """All tables for the frozen g (g = 0 when omitted).

    `sigma` may carry a precomputed compute_sigma result for the same grid.
    """
    g = g if g is not None else GridField.zeros(grid)
    sig, div_sigma, quad_report = sigma if sigma is not None else compute_sigma(grid, quad)
    conv = LatticeConvolver.on_grid(grid)
    grad = _gradient_of(g, grad_g)
    sigma_g, a_g, report = compute_sigma_g_and_ag(grid, g, grad, sigma=sig, conv=conv)

    v = grid.mesh()
    sqrt_mu = _sqrt_mu(grid)
    # d_i(sigma^{ij} v_j) - sigma^{ij} v_i v_j
    multiplier = (
        np.einsum("...j,...j->...", div_sigma, v)
        + np.trace(sig, axis1=-2, axis2=-1)
        - np.einsum("...i,...ij,...j->...", v, sig, v)
    )
    if np.any(g.values):
        weighted = sqrt_mu[..., None] * grad
        # Phi^{ij} * (v_i mu^{1/2} d_j g - d_i(mu^{1/2} d_j g))
        density = v[..., :, None] * weighted[..., None, :] - np.swapaxes(
            gradient_array(weighted, grid.spacing), -1, -2
        )
        multiplier = multiplier + conv.phi_contract(density)
    return LandauCoefficientSet(
        grid=grid,
        sigma=sig,
        div_sigma=div_sigma,
        sigma_g=sigma_g,
        a_g=a_g,
        g=g,
        grad_g=grad,
        jg_multiplier=multiplier,
        quadrature={**quad_report, **report},
        form=form,
        convolver=conv,
    )


def apply_k(coeffs: LandauCoefficientSet, f: GridField, grad_f: np.ndarray | None = None) -> GridField:
    """The nonlocal part K = K1 + K2 + K3 applied to f.

    "regularized" uses the supplied gradient and K2 + K3 =
    8 pi mu f - 2 mu^{1/2} Phi^{ij} * d_i(v_j mu^{1/2} f). "symmetric" is the
    same operator written as its own discrete adjoint with centered
    differences, so <K f, phi> = <K phi, f> holds to roundoff.
    """
    grid = coeffs.grid
    if f.grid != grid:
        raise StructuralError("f lives on a different grid", module="landau")
    conv = coeffs.convolver
    h = grid.spacing
    v = grid.mesh()
    sqrt_mu = _sqrt_mu(grid)
    mu = sqrt_mu**2
    moment = v * (sqrt_mu * f.values)[..., None]

    if coeffs.form == "symmetric":
        slope = sqrt_mu[..., None] * central_gradient(f)
        k1 = 2.0 * sqrt_mu * np.einsum("...i,...i->...", v, conv.phi_vector(slope))
        flux = sqrt_mu[..., None] * conv.phi_vector(moment)
        divergence = np.trace(gradient_array(flux, h), axis1=-2, axis2=-1)
        return f.like(k1 - 2.0 * divergence + 8.0 * np.pi * mu * f.values)

    if grad_f is None:
        raise PreconditionError("the velocity gradient of f is required", module="landau")
    grad = _gradient_of(f, grad_f)
    k1 = 2.0 * sqrt_mu * np.einsum(
        "...i,...i->...", v, conv.phi_vector(sqrt_mu[..., None] * grad + moment)
    )
    # gradient_array(...)[..., j, i] = d_i(moment_j)
    k23 = 8.0 * np.pi * mu * f.values - 2.0 * sqrt_mu * conv.phi_contract(
        np.swapaxes(gradient_array(moment, h), -1, -2)
    )
    return f.like(k1 + k23)


def apply_kbar(
    coeffs: LandauCoefficientSet, f: GridField, grad_f: np.ndarray | None = None
) -> GridField:
    """Kbar_g f = K f + J_g f."""
    k = apply_k(coeffs, f, grad_f)
    return k.like(k.values + coeffs.jg_multiplier * f.values)


# ---------------------------------------------------------------------------
# diagnostics


def fit_sigma_bounds(sigma: np.ndarray, grid: VelocityGrid) -> dict[str, float]:
    """c1 = min eigmin(sigma)<v>^3 and c2 = max eigmax(sigma)<v> over the grid."""
    eig = np.linalg.eigvalsh(sigma)
    if eig[..., 0].min() < -1e-12:
        raise DataError("sigma is not positive semidefinite", module="landau")
    return {
        "c1": float(np.min(eig[..., 0] * grid.bracket(3.0))),
        "c2": float(np.max(eig[..., -1] * grid.bracket(1.0))),
    }


def cube_group() -> list[np.ndarray]:
    """The 48 signed permutation matrices."""
    out = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            q = np.zeros((3, 3))
            for a in range(3):
                q[a, perm[a]] = signs[a]
            out.append(q)
    return out


def equivariance_residual(table: np.ndarray, grid: VelocityGrid) -> float:
    """max over Q and nodes of |T(Q v) - Q T(v) Q^T| for a (n,n,n,3,3) table."""
    c = grid.center_index
    idx = np.indices(grid.shape).reshape(3, -1) - c
    worst = 0.0
    flat = table.reshape(-1, 3, 3)
    for q in cube_group():
        k = (q @ idx).astype(int) + c
        moved = table[k[0], k[1], k[2]]
        rotated = np.einsum("ab,nbc,dc->nad", q, flat, q)
        worst = max(worst, float(np.max(np.abs(moved - rotated))))
    return worst


def annulus_decay(
    coeffs: LandauCoefficientSet,
    f: GridField,
    grad_f: np.ndarray | None = None,
    radii: tuple[float, ...] = config.ANNULUS_RADII,
    theta: float = 1.0,
) -> dict:
    """L2 norm of Kbar_g f on shells {m <= |v| < 2m} relative to ||<v>^theta(|f| + |grad f|)||_2.

    The fitted exponent is the log-log slope over the radii.
    """
    grid = coeffs.grid
    grad = central_gradient(f) if grad_f is None else grad_f
    out = apply_kbar(coeffs, f, grad).values
    speed = np.sqrt(grid.speed_squared())
    cell = grid.cell_volume
    scale = np.sqrt(
        np.sum((grid.bracket(theta) * (np.abs(f.values) + np.linalg.norm(grad, axis=-1))) ** 2) * cell
    )
    ratios = []
    for m in radii:
        shell = (speed >= m) & (speed < 2.0 * m)
        ratios.append(float(np.sqrt(np.sum(out[shell] ** 2) * cell) / scale) if scale > 0 else 0.0)
    positive = [(m, r) for m, r in zip(radii, ratios) if r > 0]
    slope = float("nan")
    if len(positive) >= 2:
        slope = float(np.polyfit(np.log([m for m, _ in positive]), np.log([r for _, r in positive]), 1)[0])
    return {"radii": list(radii), "ratios": ratios, "exponent": slope}


@dataclass
class HolderModulusReport:
    modulus: float
    g_holder_norm: float
    fitted_n: float
    kappa: float
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "modulus": self.modulus,
            "g_holder_norm": self.g_holder_norm,
            "fitted_N": self.fitted_n,
            "kappa": self.kappa,
            "sample_count": self.sample_count,
        }


def sigma_holder_modulus(
    grid: VelocityGrid,
    g_family: Callable[[np.ndarray], GridField],
    x_samples: np.ndarray,
    kappa: float = config.HOLDER_KAPPA,
) -> HolderModulusReport:
    """sup over sampled pairs and nodes of |sigma_G(x1) - sigma_G(x2)| / |x1 - x2|^{kappa/3}.

    sigma_G differences only involve Phi * (mu^{1/2}(g(x1) - g(x2))), so
    sigma itself is never built. N is modulus / (1 + |g|_holder) with the
    Holder norm of g estimated on the same pairs.
    """
    x_samples = np.asarray(x_samples, dtype=float)
    if x_samples.ndim == 1:
        x_samples = x_samples[:, None]
    conv = LatticeConvolver.on_grid(grid)
    sqrt_mu = _sqrt_mu(grid)
    fields = [g_family(x) for x in x_samples]
    tables = [conv.phi_scalar(sqrt_mu * gx.values) for gx in fields]
    modulus, g_semi = 0.0, 0.0
    g_sup = max(float(np.max(np.abs(gx.values))) for gx in fields)
    power = kappa / 3.0
    for a, b in itertools.combinations(range(len(x_samples)), 2):
        dist = float(np.linalg.norm(x_samples[a] - x_samples[b]))
        if dist == 0.0:
            continue
        scale = dist**power
        diff = np.linalg.norm(tables[a] - tables[b], axis=(-2, -1))
        modulus = max(modulus, float(diff.max()) / scale)
        g_semi = max(g_semi, float(np.max(np.abs(fields[a].values - fields[b].values))) / scale)
    g_norm = g_sup + g_semi
    return HolderModulusReport(
        modulus=modulus,
        g_holder_norm=g_norm,
        fitted_n=modulus / (1.0 + g_norm),
        kappa=kappa,
        sample_count=len(x_samples),
    )


def export_tables(coeffs: LandauCoefficientSet, directory: Path, fmt: str = "binary") -> list[Path]:
    """Write sigma and sigma_G (six channels each) and a_g (three channels)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, values in (
        ("sigma", full_to_sym(coeffs.sigma)),
        ("sigma_g", full_to_sym(coeffs.sigma_g)),
        ("a_g", coeffs.a_g),
    ):
        written += save_table(coeffs.grid, values, directory / f"{name}.field", fmt=fmt, extra={"table": name})
    return written
