"""
Truncated cubic velocity lattice and scalar fields on it.

Nodes sit at v_i = -V + i*h with h = 2V/(n-1); n is odd so the origin is a
node. Fields are stored as (n, n, n) arrays in lexicographic (i1, i2, i3)
order and are zero outside [-V, V]^3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from ..errors import ConfigurationError, DataError, StructuralError


class ExteriorPolicy(str, Enum):
    ZERO_EXTENSION = "zero_extension"


@dataclass(frozen=True)
class VelocityGrid:
    """Lattice [-V, V]^3 with n points per axis."""

    half_width: float
    n: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.half_width) or self.half_width <= 0:
            raise ConfigurationError(
                f"half_width must be positive, got {self.half_width}", module="velocity"
            )
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 3:
            raise ConfigurationError(f"n must be an integer >= 3, got {self.n}", module="velocity")
        if self.n % 2 == 0:
            raise ConfigurationError(
                f"n must be odd so the origin is a node, got {self.n}", module="velocity"
            )

    @classmethod
    def from_spacing(cls, spacing: float, half_width: float) -> "VelocityGrid":
        cells = half_width * 2.0 / spacing
        n_cells = int(round(cells))
        if abs(cells - n_cells) > 1e-9 or n_cells % 2:
            raise ConfigurationError(
                f"spacing {spacing} does not split [-{half_width}, {half_width}] into an even cell count",
                module="velocity",
            )
        return cls(half_width=half_width, n=n_cells + 1)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def center_index(self) -> int:
        return (self.n - 1) // 2

    def axis(self) -> np.ndarray:
        return -self.half_width + np.arange(self.n) * self.spacing

    def mesh(self) -> np.ndarray:
        """Node coordinates as an (n, n, n, 3) array."""
        ax = self.axis()
        return np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1)

    def speed_squared(self) -> np.ndarray:
        return np.sum(self.mesh() ** 2, axis=-1)

    def bracket(self, power: float = 1.0) -> np.ndarray:
        """<v>^power = (1 + |v|^2)^(power/2) at every node."""
        return (1.0 + self.speed_squared()) ** (0.5 * power)

    def interior_mask(self, halo: int = 1) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        if 2 * halo < self.n:
            sl = slice(halo, self.n - halo)
            mask[sl, sl, sl] = True
        return mask

    def node_index(self, v: np.ndarray) -> tuple[int, int, int] | None:
        """Lattice index of coordinate v, or None when v is off-lattice or outside the box."""
        pos = (np.asarray(v, dtype=float) + self.half_width) / self.spacing
        idx = np.rint(pos)
        if np.any(np.abs(pos - idx) > 1e-9) or np.any(idx < 0) or np.any(idx > self.n - 1):
            return None
        return tuple(int(i) for i in idx)


@dataclass
class GridField:
    """Scalar field on a VelocityGrid with zero extension outside the box."""

    grid: VelocityGrid
    values: np.ndarray
    exterior_policy: ExteriorPolicy = field(default=ExteriorPolicy.ZERO_EXTENSION)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise StructuralError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}",
                module="velocity",
            )
        if not np.all(np.isfinite(self.values)):
            raise DataError("GridField values must be finite", module="velocity")

    @classmethod
    def zeros(cls, grid: VelocityGrid) -> "GridField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: VelocityGrid, value: float) -> "GridField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(
        cls, grid: VelocityGrid, fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    ) -> "GridField":
        """Tabulate fn(v1, v2, v3) with broadcast coordinate arrays."""
        v = grid.mesh()
        vals = np.broadcast_to(fn(v[..., 0], v[..., 1], v[..., 2]), grid.shape)
        return cls(grid, np.array(vals, dtype=float))

    def like(self, values: np.ndarray) -> "GridField":
        return GridField(self.grid, values, self.exterior_policy)

    def value_at(self, v: np.ndarray) -> float:
        """Nodal value at v; 0 outside the box (and at off-lattice points)."""
        idx = self.grid.node_index(v)
        if idx is None:
            return 0.0
        return float(self.values[idx])

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def __add__(self, other: "GridField | float") -> "GridField":
        if isinstance(other, GridField):
            _require_same_grid(self, other)
            return self.like(self.values + other.values)
        return self.like(self.values + float(other))

    def __sub__(self, other: "GridField | float") -> "GridField":
        if isinstance(other, GridField):
            _require_same_grid(self, other)
            return self.like(self.values - other.values)
        return self.like(self.values - float(other))

    def __mul__(self, other: "GridField | float") -> "GridField":
        if isinstance(other, GridField):
            _require_same_grid(self, other)
            return self.like(self.values * other.values)
        return self.like(self.values * float(other))

    __rmul__ = __mul__


def _require_same_grid(a: GridField, b: GridField) -> None:
    if a.grid != b.grid:
        raise StructuralError(f"grid mismatch: {a.grid} vs {b.grid}", module="velocity")
