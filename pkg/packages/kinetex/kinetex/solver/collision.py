"""
Velocity-space collision step, solved cell by cell.

KFP mode discretizes A_h - b.delta_h - lambda from the stencil decomposition of
a. Landau mode builds A_h from the nodewise decomposition of sigma_G + nu I
and adds a_g.grad f + Kbar_g f explicitly, lagged by one step.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from loguru import logger
from scipy.sparse.linalg import bicgstab, cg

from ..errors import SolverError, StepSizeError
from ..landau import LandauCoefficientSet, apply_kbar, build_coefficients
from ..stencil import SymMatrix3, decompose, decompose_field, default_stencil
from ..velocity import (
    GridField,
    assemble_ah,
    assemble_drift,
    gradient_array,
    interior_bond_mask,
    shift_array,
    truncation_outflow,
)
from . import config
from .models import KfpMode, LandauMode, PhaseField, SolverConfig


@dataclass
class CollisionResult:
    field: PhaseField
    # values A_h, drift, lambda and the explicit terms were applied to
    applied: np.ndarray
    explicit: np.ndarray | None
    iterations: int


class CollisionOperator:
    """Matrices and explicit terms for one (cfg, dt); reused across steps."""

    def __init__(self, cfg: SolverConfig, coefficients: LandauCoefficientSet | None = None):
        self.cfg = cfg
        grid = cfg.grid
        self.dirs = default_stencil()
        self.coefficients = None
        if isinstance(cfg.mode, KfpMode):
            self.weights = self._kfp_weights(cfg.mode)
            drift = cfg.mode.b if cfg.mode.has_drift else None
        else:
            self.coefficients = coefficients or build_coefficients(grid, cfg.mode.g, form=cfg.mode.form)
            self.weights = self._landau_weights(cfg.mode, self.coefficients)
            drift = None
        self.floor = float(min(np.min(w) for w in self.weights))
        if self.floor < 0:
            logger.warning(
                "stencil weights reach {floor:.3e} < 0; the scheme is not monotone", floor=self.floor
            )
        self.a_matrix = assemble_ah(grid, self.weights, self.dirs, cfg.closure)
        self.drift_matrix = assemble_drift(grid, drift) if drift is not None else None
        size = grid.n**3
        system = sp.identity(size, format="csr") - cfg.dt * self.a_matrix + cfg.dt * cfg.lam * sp.identity(size)
        if self.drift_matrix is not None:
            system = system + cfg.dt * self.drift_matrix
        self.system = system.tocsr()
        self.symmetric = self.drift_matrix is None
        diag = self.system.diagonal()
        self.preconditioner = sp.diags(1.0 / diag)
        self.maxiter = config.CG_MAXITER_FACTOR * size
        if cfg.scheme == "explicit":
            self.check_cfl()

    @staticmethod
    def _kfp_weights(mode: KfpMode) -> list:
        if mode.a.ndim == 2:
            d = decompose(SymMatrix3(mode.a), delta1=mode.floor, delta=mode.delta)
            return [float(w) for w in d.weights]
        return list(decompose_field(mode.a, mode.floor))

    @staticmethod
    def _landau_weights(mode: LandauMode, coefficients: LandauCoefficientSet) -> list:
        diffusion = coefficients.sigma_g + mode.nu * np.eye(3)
        return list(decompose_field(diffusion, mode.nu / 8.0))

    @property
    def monotone(self) -> bool:
        return isinstance(self.cfg.mode, KfpMode) and self.drift_matrix is None and self.floor >= 0

    def cfl_limit(self) -> float:
        """Largest explicit dt: 1 / (2 max sum_k |a_k| |l_k|^2 / h^2 + lambda)."""
        grid = self.cfg.grid
        total = np.zeros(grid.shape)
        for w, l in zip(self.weights, self.dirs):
            total = total + np.abs(w) * l.norm_squared()
        return 1.0 / (2.0 * float(np.max(total)) / grid.spacing**2 + self.cfg.lam)

    def check_cfl(self) -> None:
        limit = self.cfl_limit()
        if self.cfg.dt > limit:
            raise StepSizeError(
                f"explicit collision step needs dt <= {limit:.6g}, got {self.cfg.dt}; use the implicit scheme",
                module="solver",
            )

    def gershgorin_floor(self) -> float:
        m = self.system
        off = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(m.diagonal())
        return float(np.min(m.diagonal() - off))

    def explicit_terms(self, values: np.ndarray) -> np.ndarray | None:
        """a_g . grad f + Kbar_g f per cell (Landau mode only)."""
        if self.coefficients is None:
            return None
        grid = self.cfg.grid
        out = np.empty_like(values)
        for j, cell in enumerate(values):
            grad = gradient_array(cell, grid.spacing)
            kbar = apply_kbar(self.coefficients, GridField(grid, cell), grad).values
            out[j] = np.einsum("...i,...i->...", self.coefficients.a_g, grad) + kbar
        return out

    def operator_mass_rate(self, values: np.ndarray, explicit: np.ndarray | None) -> float:
        """sum over the slab of (A_h f - b.delta f + explicit) h^3 dx."""
        flat = values.reshape(values.shape[0], -1)
        rate = flat @ self.a_matrix.T
        if self.drift_matrix is not None:
            rate = rate - flat @ self.drift_matrix.T
        total = float(np.sum(rate))
        if explicit is not None:
            total += float(np.sum(explicit))
        return total * self.cfg.domain.dx * self.cfg.grid.cell_volume

    def truncation_rate(self, values: np.ndarray) -> float:
        """Zero-extension outflow through the velocity-box surface, summed over cells."""
        grid = self.cfg.grid
        total = sum(truncation_outflow(GridField(grid, cell), self.weights, self.dirs) for cell in values)
        return float(total) * self.cfg.domain.dx

    def dissipation(self, values: np.ndarray, theta: float) -> float:
        """sum_k sum over in-box bonds |delta_{h,l_k} f|^2 <v>^theta h^3 dx."""
        grid = self.cfg.grid
        stacked = np.moveaxis(values, 0, -1)
        weight = grid.bracket(theta)[..., None]
        total = 0.0
        for l in self.dirs:
            inside = interior_bond_mask(grid.n, l)[..., None]
            diff = (shift_array(stacked, l.vector) - stacked) / grid.spacing
            total += float(np.sum(diff**2 * weight * inside))
        return total * grid.cell_volume * self.cfg.domain.dx

    def _solve(self, rhs: np.ndarray) -> tuple[np.ndarray, int]:
        count = 0

        def tick(_):
            nonlocal count
            count += 1

        method = cg if self.symmetric else bicgstab
        x, info = method(
            self.system,
            rhs,
            x0=rhs.copy(),
            rtol=config.CG_RTOL,
            atol=0.0,
            maxiter=self.maxiter,
            M=self.preconditioner,
            callback=tick,
        )
        if info != 0:
            raise SolverError(
                f"{method.__name__} did not converge in {self.maxiter} iterations "
                f"(info={info}, eigmin estimate {self.gershgorin_floor():.3e})",
                module="solver",
            )
        return x, count

    def step(self, f: PhaseField, source: np.ndarray) -> CollisionResult:
        cfg = self.cfg
        n_x = f.domain.n_x
        explicit = self.explicit_terms(f.values)
        forcing = source if explicit is None else source + explicit
        flat = f.values.reshape(n_x, -1)
        rhs = flat + cfg.dt * forcing.reshape(n_x, -1)
        if cfg.scheme == "explicit":
            change = flat @ self.a_matrix.T - cfg.lam * flat
            if self.drift_matrix is not None:
                change = change - flat @ self.drift_matrix.T
            values = rhs + cfg.dt * change
            return CollisionResult(f.with_values(values.reshape(f.values.shape), f.t + cfg.dt), f.values, explicit, 0)

        solver = self._solve
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                results = list(pool.map(solver, rhs))
        else:
            results = [solver(row) for row in rhs]
        values = np.stack([x for x, _ in results]).reshape(f.values.shape)
        iterations = max(k for _, k in results)
        new = f.with_values(values, f.t + cfg.dt)
        return CollisionResult(new, new.values, explicit, iterations)


def collision_step(
    f: PhaseField, cfg: SolverConfig, source: np.ndarray | None = None, operator: CollisionOperator | None = None
) -> PhaseField:
    """One collision step of length cfg.dt; the source defaults to cfg.source at t + dt."""
    operator = operator or CollisionOperator(cfg)
    if source is None:
        source = cfg.evaluate(cfg.source, f.t + cfg.dt)
    return operator.step(f, source).field
