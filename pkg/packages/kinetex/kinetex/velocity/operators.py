"""
Finite-difference primitives on the truncated velocity lattice.

    T_{h,l} u(v)   = u(v + h l)
    delta_{h,l} u  = (T_{h,l} u - u) / h
    Delta_{h,xi} u = (T_{h,xi} u - 2u + T_{h,-xi} u) / h^2
    A_h u          = -sum_k delta_{h,-l_k} (a_k delta_{h,l_k} u)

All functions return new fields and never mutate their inputs. Values outside
the box are taken as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence, Union

import numpy as np
import scipy.sparse as sp

from ..errors import ConfigurationError, StructuralError
from .grid import GridField, VelocityGrid


@dataclass(frozen=True)
class StencilDirection:
    """Integer lattice direction l != 0."""

    vector: tuple[int, int, int]

    def __post_init__(self) -> None:
        vec = tuple(int(c) for c in self.vector)
        if len(vec) != 3 or any(c != orig for c, orig in zip(vec, self.vector)):
            raise ConfigurationError(
                f"stencil direction must be an integer 3-vector, got {self.vector}",
                module="velocity",
            )
        if vec == (0, 0, 0):
            raise ConfigurationError("stencil direction must be nonzero", module="velocity")
        object.__setattr__(self, "vector", vec)

    def __neg__(self) -> "StencilDirection":
        return StencilDirection(tuple(-c for c in self.vector))

    def as_array(self) -> np.ndarray:
        return np.array(self.vector, dtype=float)

    def norm_squared(self) -> int:
        return sum(c * c for c in self.vector)


DirectionLike = Union[StencilDirection, Sequence[int]]
WeightLike = Union[GridField, float, np.ndarray]
Closure = Literal["zero", "no_flux", "absorbing"]


def as_direction(l: DirectionLike) -> StencilDirection:
    return l if isinstance(l, StencilDirection) else StencilDirection(tuple(l))


def _lattice_steps(grid: VelocityGrid, h_step: float) -> int:
    ratio = h_step / grid.spacing
    m = int(round(ratio))
    if m == 0 or abs(ratio - m) > 1e-9:
        raise ConfigurationError(
            f"step {h_step} is not a nonzero integer multiple of the spacing {grid.spacing}",
            module="velocity",
        )
    return m


def shift_array(values: np.ndarray, offset: Sequence[int]) -> np.ndarray:
    """out[i] = values[i + offset] over the leading three axes, zero when out of range."""
    out = np.zeros_like(values)
    src, dst = [], []
    for axis, off in enumerate(offset):
        n = values.shape[axis]
        if abs(off) >= n:
            return out
        if off >= 0:
            src.append(slice(off, n))
            dst.append(slice(0, n - off))
        else:
            src.append(slice(0, n + off))
            dst.append(slice(-off, n))
    out[tuple(dst)] = values[tuple(src)]
    return out


def shift(u: GridField, h_step: float, l: DirectionLike) -> GridField:
    m = _lattice_steps(u.grid, h_step)
    offset = [m * c for c in as_direction(l).vector]
    return u.like(shift_array(u.values, offset))


def first_diff(u: GridField, h_step: float, l: DirectionLike) -> GridField:
    shifted = shift(u, h_step, l)
    return u.like((shifted.values - u.values) / h_step)


def second_diff(u: GridField, h_step: float, xi: DirectionLike) -> GridField:
    xi = as_direction(xi)
    fwd = shift(u, h_step, xi)
    bwd = shift(u, h_step, -xi)
    return u.like((fwd.values - 2.0 * u.values + bwd.values) / h_step**2)


def _weight_values(grid: VelocityGrid, weight: WeightLike) -> np.ndarray:
    if isinstance(weight, GridField):
        if weight.grid != grid:
            raise StructuralError("weight field lives on a different grid", module="velocity")
        return weight.values
    arr = np.asarray(weight, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.shape, float(arr))
    if arr.shape != grid.shape:
        raise StructuralError(
            f"weight array shape {arr.shape} does not match grid {grid.shape}", module="velocity"
        )
    return arr


def _check_stencil(weights: Sequence[WeightLike], dirs: Sequence[DirectionLike]) -> None:
    if len(weights) != len(dirs):
        raise StructuralError(
            f"{len(weights)} weights for {len(dirs)} directions", module="velocity"
        )


def apply_ah(
    u: GridField, weights: Sequence[WeightLike], dirs: Sequence[DirectionLike]
) -> GridField:
    """A_h u = -sum_k delta_{h,-l_k}(a_k delta_{h,l_k} u) with zero extension."""
    _check_stencil(weights, dirs)
    h = u.grid.spacing
    out = np.zeros(u.grid.shape)
    for weight, l in zip(weights, dirs):
        l = as_direction(l)
        a = _weight_values(u.grid, weight)
        flux = a * (shift_array(u.values, l.vector) - u.values) / h
        out += (flux - shift_array(flux, (-l).vector)) / h
    return u.like(out)


def _bond_slices(n: int, l: StencilDirection) -> tuple[tuple[slice, ...], tuple[slice, ...]]:
    """Slices selecting nodes p and p + l with both endpoints inside the box."""
    src, dst = [], []
    for c in l.vector:
        if c >= 0:
            src.append(slice(0, n - c))
            dst.append(slice(c, n))
        else:
            src.append(slice(-c, n))
            dst.append(slice(0, n + c))
    return tuple(src), tuple(dst)


def _leaving_mask(n: int, l: StencilDirection) -> np.ndarray:
    """Nodes p whose neighbour p + l is outside the box."""
    inside = np.zeros((n, n, n), dtype=bool)
    src, _ = _bond_slices(n, l)
    inside[src] = True
    return ~inside


def assemble_ah(
    grid: VelocityGrid,
    weights: Sequence[WeightLike],
    dirs: Sequence[DirectionLike],
    closure: Closure = "zero",
) -> sp.csr_matrix:
    """Sparse matrix of A_h acting on raveled (i1, i2, i3) vectors.

    Each bond (p, p + l_k) carries weight a_k(p). Closures differ only on bonds
    with an endpoint outside the box:

    - ``zero``: identical to :func:`apply_ah` (forward bonds see u = 0 outside,
      backward bonds with an exterior base node are dropped);
    - ``no_flux``: every such bond is dropped, so constants are in the kernel and
      the matrix is symmetric;
    - ``absorbing``: every such bond sees u = 0 outside with the weight of its
      interior endpoint; symmetric, loses mass through the box surface.
    """
    _check_stencil(weights, dirs)
    if closure not in ("zero", "no_flux", "absorbing"):
        raise ConfigurationError(f"unknown closure {closure!r}", module="velocity")
    n = grid.n
    h2 = grid.spacing**2
    idx = np.arange(n**3).reshape(grid.shape)
    rows, cols, vals = [], [], []
    diag = np.zeros(grid.shape)
    for weight, l in zip(weights, dirs):
        l = as_direction(l)
        a = _weight_values(grid, weight) / h2
        src, dst = _bond_slices(n, l)
        p, q, w = idx[src].ravel(), idx[dst].ravel(), a[src].ravel()
        rows += [p, q]
        cols += [q, p]
        vals += [w, w]
        diag[src] -= a[src]
        diag[dst] -= a[src]
        if closure != "no_flux":
            leaving = _leaving_mask(n, l)
            diag[leaving] -= a[leaving]
        if closure == "absorbing":
            entering = _leaving_mask(n, -l)
            diag[entering] -= a[entering]
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n**3, n**3),
    )
    return mat.tocsr()


def truncation_outflow(
    u: GridField, weights: Sequence[WeightLike], dirs: Sequence[DirectionLike]
) -> float:
    """Mass per unit time an absorbing box surface would remove from u."""
    _check_stencil(weights, dirs)
    grid = u.grid
    total = 0.0
    for weight, l in zip(weights, dirs):
        l = as_direction(l)
        a = _weight_values(grid, weight)
        for mask in (_leaving_mask(grid.n, l), _leaving_mask(grid.n, -l)):
            total += float(np.sum(a[mask] * u.values[mask]))
    return total * grid.spacing


def gradient_array(values: np.ndarray, h: float) -> np.ndarray:
    """Centered differences of a lattice array along its first three axes.

    Trailing channel axes are carried along; the new axis is appended last.
    """
    comps = []
    for axis in range(3):
        e = [0, 0, 0]
        e[axis] = 1
        fwd = shift_array(values, e)
        bwd = shift_array(values, [-c for c in e])
        comps.append((fwd - bwd) / (2.0 * h))
    return np.stack(comps, axis=-1)


def central_gradient(u: GridField) -> np.ndarray:
    """Average of forward and backward differences along each axis, shape (n, n, n, 3)."""
    return gradient_array(u.values, u.grid.spacing)


def directions_from(vectors: Iterable[Sequence[int]]) -> list[StencilDirection]:
    return [as_direction(v) for v in vectors]


def interior_bond_mask(n: int, l: DirectionLike) -> np.ndarray:
    """Nodes p whose neighbour p + l lies inside the box."""
    return ~_leaving_mask(n, as_direction(l))


def assemble_drift(grid: VelocityGrid, b: np.ndarray) -> sp.csr_matrix:
    """Sparse matrix of b^i delta_{h,e_i} with zero extension; b is (3,) or (n, n, n, 3)."""
    b = np.broadcast_to(np.asarray(b, dtype=float), (*grid.shape, 3))
    n = grid.n
    h = grid.spacing
    idx = np.arange(n**3).reshape(grid.shape)
    rows, cols, vals = [idx.ravel()], [idx.ravel()], [-np.sum(b, axis=-1).ravel() / h]
    for i in range(3):
        e = StencilDirection(tuple(int(i == k) for k in range(3)))
        src, dst = _bond_slices(n, e)
        rows.append(idx[src].ravel())
        cols.append(idx[dst].ravel())
        vals.append(b[..., i][src].ravel() / h)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n**3, n**3),
    )
    return mat.tocsr()
