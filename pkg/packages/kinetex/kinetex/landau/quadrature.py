"""
Lattice convolution with the Landau kernel.

Densities live on a cubic lattice of spacing h (the velocity grid, or the
grid padded by a margin); outputs are read back on a window of that lattice.
Kernel tables are transformed once per geometry with scipy.fft and reused for
every density.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal

import numpy as np
import scipy.fft as sfft
from loguru import logger
from scipy.special import erf

from ..velocity import VelocityGrid
from . import config
from .kernel import (
    SYM_CHANNELS,
    kernel_divergence_table,
    kernel_phi_table,
    maxwellian_values,
    sym_to_full,
)

KernelName = Literal["phi", "divergence"]


@dataclass(frozen=True)
class QuadratureSpec:
    """How far the Maxwellian is sampled beyond the grid box."""

    margin: float = config.QUAD_MARGIN

    def margin_nodes(self, grid: VelocityGrid) -> int:
        return int(np.ceil(self.margin / grid.spacing - 1e-9))

    def tail_mass(self, grid: VelocityGrid) -> float:
        """Maxwellian mass outside the padded box."""
        reach = grid.half_width + (self.margin_nodes(grid) + 0.5) * grid.spacing
        return float(1.0 - erf(reach) ** 3)

    def check_tail(self, grid: VelocityGrid) -> float:
        tail = self.tail_mass(grid)
        if self.margin < config.MIN_QUAD_MARGIN or tail > config.TAIL_TOLERANCE:
            logger.warning(
                "quadrature margin {m} leaves Maxwellian tail {t:.2e} outside the box",
                m=self.margin,
                t=tail,
            )
        return tail


def _offsets(reach: int, h: float) -> np.ndarray:
    k = np.arange(-reach, reach + 1)
    return np.stack(np.meshgrid(k, k, k, indexing="ij"), axis=-1) * h


class LatticeConvolver:
    """out(p) = sum_q K(h(p - q)) F(q) h^3 for p in an output window.

    `density_n` is the lattice size of the densities, `out_offset` and
    `out_n` locate the output window inside it.
    """

    def __init__(self, h: float, density_n: int, out_offset: int = 0, out_n: int | None = None):
        self.h = float(h)
        self.density_n = int(density_n)
        self.out_offset = int(out_offset)
        self.out_n = self.density_n if out_n is None else int(out_n)
        self.reach = max(self.density_n - 1 - self.out_offset, self.out_offset + self.out_n - 1)
        full = self.density_n + 2 * self.reach
        self.fft_shape = tuple(sfft.next_fast_len(full, real=True) for _ in range(3))

    @classmethod
    def on_grid(cls, grid: VelocityGrid) -> "LatticeConvolver":
        return cls(grid.spacing, grid.n)

    @classmethod
    def padded(cls, grid: VelocityGrid, margin_nodes: int) -> "LatticeConvolver":
        return cls(grid.spacing, grid.n + 2 * margin_nodes, margin_nodes, grid.n)

    def _forward(self, table: np.ndarray) -> np.ndarray:
        return sfft.rfftn(table, s=self.fft_shape, axes=(0, 1, 2), workers=-1)

    @cached_property
    def _phi_hat(self) -> np.ndarray:
        table = kernel_phi_table(_offsets(self.reach, self.h), self.h)
        channels = np.stack([table[..., i, j] for i, j in SYM_CHANNELS], axis=-1)
        return self._forward(channels)

    @cached_property
    def _div_hat(self) -> np.ndarray:
        return self._forward(kernel_divergence_table(_offsets(self.reach, self.h), self.h))

    def _phi_channel(self, i: int, j: int) -> np.ndarray:
        return self._phi_hat[..., SYM_CHANNELS.index((min(i, j), max(i, j)))]

    def _back(self, spectrum: np.ndarray) -> np.ndarray:
        full = sfft.irfftn(spectrum, s=self.fft_shape, axes=(0, 1, 2), workers=-1)
        lo = self.reach + self.out_offset
        sl = slice(lo, lo + self.out_n)
        return full[sl, sl, sl] * self.h**3

    def phi_scalar(self, density: np.ndarray) -> np.ndarray:
        """Phi * rho for a scalar density, shape (..., 3, 3)."""
        rho_hat = self._forward(density)
        channels = np.stack(
            [self._back(self._phi_hat[..., c] * rho_hat) for c in range(len(SYM_CHANNELS))],
            axis=-1,
        )
        return sym_to_full(channels)

    def phi_vector(self, density: np.ndarray) -> np.ndarray:
        """(Phi^{ij} * F_j)_i for a vector density (..., 3)."""
        f_hat = [self._forward(density[..., j]) for j in range(3)]
        return np.stack(
            [self._back(sum(self._phi_channel(i, j) * f_hat[j] for j in range(3))) for i in range(3)],
            axis=-1,
        )

    def phi_contract(self, density: np.ndarray) -> np.ndarray:
        """sum_ij Phi^{ij} * M_ij for a matrix density (..., 3, 3)."""
        spectrum = 0
        for c, (i, j) in enumerate(SYM_CHANNELS):
            m = density[..., i, j] if i == j else density[..., i, j] + density[..., j, i]
            spectrum = spectrum + self._phi_hat[..., c] * self._forward(m)
        return self._back(spectrum)

    def divergence_vector(self, density: np.ndarray) -> np.ndarray:
        """sum_j b_j * F_j with b_j = d_i Phi^{ij}."""
        spectrum = sum(self._div_hat[..., j] * self._forward(density[..., j]) for j in range(3))
        return self._back(spectrum)


def padded_mesh(grid: VelocityGrid, margin_nodes: int) -> np.ndarray:
    ax = -grid.half_width + np.arange(-margin_nodes, grid.n + margin_nodes) * grid.spacing
    return np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1)


def padded_maxwellian(grid: VelocityGrid, margin_nodes: int) -> np.ndarray:
    return maxwellian_values(padded_mesh(grid, margin_nodes))


def convolve_at(
    v: np.ndarray,
    kernel: KernelName,
    density: Callable[[np.ndarray], np.ndarray],
    spacing: float,
    box: float,
) -> np.ndarray:
    """Kernel convolution at a single point v on a lattice centered at v.

    The density is sampled on v + h Z^3 restricted to [-box, box]^3. For
    "phi" the result is 3x3 against a scalar density; for "divergence" the
    density is a vector field and the scalar sum_j b_j * F_j is returned.
    """
    v = np.asarray(v, dtype=float)
    reach = int(np.ceil((box + np.max(np.abs(v))) / spacing))
    offsets = _offsets(reach, spacing)
    nodes = v + offsets
    inside = np.all(np.abs(nodes) <= box, axis=-1)
    values = np.asarray(density(nodes), dtype=float)
    values = np.where(inside.reshape(inside.shape + (1,) * (values.ndim - 3)), values, 0.0)
    if kernel == "phi":
        table = kernel_phi_table(-offsets, spacing)
        return np.einsum("abcij,abc->ij", table, values) * spacing**3
    table = kernel_divergence_table(-offsets, spacing)
    return np.asarray(np.einsum("abcj,abcj->", table, values) * spacing**3)
