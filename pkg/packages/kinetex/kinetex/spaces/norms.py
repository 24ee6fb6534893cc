"""
Weighted norms and regularity diagnostics on discrete phase-space fields.

A phase-space field is an array of shape (*x_shape, n, n, n): the last three
axes are the velocity lattice of a VelocityGrid, the leading ones (possibly
none) are spatial cells with volume `x_cell`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Mapping

import numpy as np
from loguru import logger

from ..errors import ConfigurationError, DataError, DegenerateCylinderError, PreconditionError
from ..velocity import GridField, VelocityGrid


@dataclass(frozen=True)
class WeightSpec:
    """L_{p,theta}: the measure carries <v>^theta."""

    p: float = 2.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        if not (self.p >= 1.0):
            raise ConfigurationError(f"p must be >= 1, got {self.p}", module="spaces")
        if not (self.theta >= 0.0) or math.isinf(self.theta):
            raise ConfigurationError(f"theta must be finite and >= 0, got {self.theta}", module="spaces")


@dataclass
class NormReport:
    name: str
    value: float
    theta: float
    p: float
    sample_count: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        if math.isinf(self.p):
            out["p"] = "inf"
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _values(f: GridField | np.ndarray) -> np.ndarray:
    return f.values if isinstance(f, GridField) else np.asarray(f, dtype=float)


def weighted_norm(
    f: GridField | np.ndarray, grid: VelocityGrid, spec: WeightSpec, x_cell: float = 1.0
) -> float:
    """(sum |f|^p <v>^theta dmu)^{1/p}; the weighted sup for p = inf."""
    values = _values(f)
    weight = grid.bracket(spec.theta)
    if math.isinf(spec.p):
        return float(np.max(np.abs(values) * weight)) if values.size else 0.0
    cell = x_cell * grid.cell_volume
    total = np.sum(np.abs(values) ** spec.p * weight) * cell
    return float(total ** (1.0 / spec.p))


def sigma_weighted_norm(
    f: GridField | np.ndarray,
    grad: np.ndarray,
    sigma: np.ndarray,
    grid: VelocityGrid,
    theta: float = 0.0,
    x_cell: float = 1.0,
) -> float:
    """(sum (sigma grad f . grad f + sigma^{ij} v_i v_j f^2) <v>^theta dmu)^{1/2}.

    `sigma` is (n, n, n, 3, 3) and is shared by all spatial cells.
    """
    values = _values(f)
    eig_min = np.linalg.eigvalsh(sigma)[..., 0]
    scale = max(float(np.max(np.abs(sigma))), 1.0)
    if eig_min.min() < -1e-12 * scale:
        raise DataError(
            f"sigma is not positive semidefinite (eigmin {eig_min.min():.3e})", module="spaces"
        )
    v = grid.mesh()
    drift = np.einsum("...i,...ij,...j->...", v, sigma, v)
    energy = np.einsum("...i,...ij,...j->...", grad, sigma, grad) + drift * values**2
    total = np.sum(energy * grid.bracket(theta)) * x_cell * grid.cell_volume
    return float(np.sqrt(max(total, 0.0)))


# ---------------------------------------------------------------------------
# Holder estimators


@dataclass
class HolderEstimate:
    """Sampled lower bound of a seminorm."""

    value: float
    pairs: int
    skipped: int
    alpha: float

    def report(self, name: str, seed: int | None = None) -> NormReport:
        return NormReport(name, self.value, theta=0.0, p=math.inf, sample_count=self.pairs, seed=seed)


PhaseFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _draw_pairs(
    count: int, x_box: np.ndarray, v_box: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, ...]:
    dx, dv = x_box.shape[1], v_box.shape[1]
    # one block so a longer draw extends a shorter one with the same seed
    u = rng.random((count, 2 * (dx + dv)))
    lo = np.concatenate([x_box[0], v_box[0], x_box[0], v_box[0]])
    hi = np.concatenate([x_box[1], v_box[1], x_box[1], v_box[1]])
    pts = lo + u * (hi - lo)
    return pts[:, :dx], pts[:, dx : dx + dv], pts[:, dx + dv : 2 * dx + dv], pts[:, 2 * dx + dv :]


def anisotropic_holder_seminorm(
    f: PhaseFn,
    x_box: np.ndarray,
    v_box: np.ndarray,
    alpha: float,
    count: int,
    rng: np.random.Generator,
) -> HolderEstimate:
    """max |f(x1,v1) - f(x2,v2)| / (|x1-x2|^{1/3} + |v1-v2|)^alpha over uniform pairs.

    Boxes are (2, d) arrays of lower and upper corners.
    """
    if not 0.0 < alpha <= 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1], got {alpha}", module="spaces")
    x_box = np.asarray(x_box, dtype=float).reshape(2, -1)
    v_box = np.asarray(v_box, dtype=float).reshape(2, -1)
    x1, v1, x2, v2 = _draw_pairs(count, x_box, v_box, rng)
    dist = np.linalg.norm(x1 - x2, axis=-1) ** (1.0 / 3.0) + np.linalg.norm(v1 - v2, axis=-1)
    diff = np.abs(np.asarray(f(x1, v1), dtype=float) - np.asarray(f(x2, v2), dtype=float))
    diff = diff.reshape(count, -1).max(axis=1) if diff.ndim > 1 else diff
    valid = dist > 0
    ratios = diff[valid] / dist[valid] ** alpha
    skipped = int(count - valid.sum())
    if skipped:
        logger.debug("skipped {k} coincident pairs", k=skipped)
    return HolderEstimate(
        value=float(ratios.max()) if ratios.size else 0.0,
        pairs=int(valid.sum()),
        skipped=skipped,
        alpha=alpha,
    )


def holder_norm(
    f: PhaseFn,
    x_box: np.ndarray,
    v_box: np.ndarray,
    alpha: float,
    count: int,
    rng: np.random.Generator,
) -> float:
    """Sampled sup |f| plus the sampled anisotropic seminorm."""
    x_box = np.asarray(x_box, dtype=float).reshape(2, -1)
    v_box = np.asarray(v_box, dtype=float).reshape(2, -1)
    semi = anisotropic_holder_seminorm(f, x_box, v_box, alpha, count, rng)
    x1, v1, _, _ = _draw_pairs(count, x_box, v_box, rng)
    return float(np.max(np.abs(f(x1, v1)))) + semi.value


# ---------------------------------------------------------------------------
# kinetic cylinders


def _unit_ball(count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    direction = rng.standard_normal((count, dim))
    direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
    return direction * rng.random((count, 1)) ** (1.0 / dim)


@dataclass(frozen=True)
class KineticCylinder:
    """Q_r(z0) = {t0 - r^2 < t <= t0, |x - x0 - (t - t0) v0| < r^3, |v - v0| < r}."""

    t0: float
    x0: tuple[float, ...]
    v0: tuple[float, float, float]
    r: float
    # velocity component paired with each spatial axis; a single axis pairs with v3
    x_components: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise DegenerateCylinderError(f"cylinder radius must be positive, got {self.r}", module="spaces")
        if not self.x_components:
            comps = (2,) if len(self.x0) == 1 else tuple(range(len(self.x0)))
            object.__setattr__(self, "x_components", comps)

    def _drift(self) -> np.ndarray:
        return np.asarray(self.v0, dtype=float)[list(self.x_components)]

    def contains(self, t: np.ndarray, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        x0, v0 = np.asarray(self.x0, dtype=float), np.asarray(self.v0, dtype=float)
        shift = x0 + (t - self.t0)[..., None] * self._drift()
        return (
            (t > self.t0 - self.r**2)
            & (t <= self.t0)
            & (np.linalg.norm(np.asarray(x) - shift, axis=-1) < self.r**3)
            & (np.linalg.norm(np.asarray(v) - v0, axis=-1) < self.r)
        )

    def sample_pairs(self, count: int, rng: np.random.Generator) -> tuple[np.ndarray, ...]:
        """Pairs sharing a time level; radii enter only through scaling of unit samples."""
        d = len(self.x0)
        s = rng.random(count)
        bx = [_unit_ball(count, d, rng) for _ in range(2)]
        bv = [_unit_ball(count, 3, rng) for _ in range(2)]
        return self.place(s, bx, bv)

    def place(self, s: np.ndarray, bx: list[np.ndarray], bv: list[np.ndarray]) -> tuple[np.ndarray, ...]:
        x0, v0 = np.asarray(self.x0, dtype=float), np.asarray(self.v0, dtype=float)
        t = self.t0 - self.r**2 * s
        shift = x0 + (t - self.t0)[:, None] * self._drift()
        x1, x2 = (shift + self.r**3 * b for b in bx)
        v1, v2 = (v0 + self.r * b for b in bv)
        return t, x1, v1, x2, v2


CoefficientFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def kinetic_osc(a: CoefficientFn, cyl: KineticCylinder, sample_count: int, rng: np.random.Generator) -> float:
    """Mean |a(t,x1,v1) - a(t,x2,v2)| over pairs in Q_r(z0) sharing t.

    Matrix-valued coefficients use the Frobenius norm of the difference.
    """
    if sample_count < 1:
        raise DegenerateCylinderError("kinetic_osc needs at least one sample", module="spaces")
    t, x1, v1, x2, v2 = cyl.sample_pairs(sample_count, rng)
    diff = np.asarray(a(t, x1, v1), dtype=float) - np.asarray(a(t, x2, v2), dtype=float)
    diff = diff.reshape(sample_count, -1)
    return float(np.mean(np.linalg.norm(diff, axis=-1)))


# ---------------------------------------------------------------------------
# S_p components


@dataclass
class SpNormComponents:
    f: float
    grad_v: float
    hess_v: float
    transport: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @property
    def total(self) -> float:
        return self.f + self.grad_v + self.hess_v + self.transport


def _velocity_derivatives(values: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """|grad_v| and |D^2_v| with second-order one-sided differences at box edges."""
    axes = tuple(range(values.ndim - 3, values.ndim))
    grad = np.stack(np.gradient(values, h, axis=axes), axis=-1)
    hess = np.stack(
        [np.stack(np.gradient(grad[..., i], h, axis=axes), axis=-1) for i in range(3)], axis=-2
    )
    return np.linalg.norm(grad, axis=-1), np.linalg.norm(hess, axis=(-2, -1))


def _transport_part(
    values: np.ndarray, grid: VelocityGrid, dx: float | tuple[float, ...], x_axes: Mapping[int, int]
) -> np.ndarray:
    """sum_a v_{c(a)} d_{x_a} values over the spatial axes a."""
    n_x = values.ndim - 3
    spacing = (dx,) * n_x if np.isscalar(dx) else tuple(dx)
    v = grid.mesh()
    out = np.zeros_like(values)
    for axis, component in x_axes.items():
        if values.shape[axis] < 2:
            continue
        out += np.gradient(values, spacing[axis], axis=axis) * v[..., component]
    return out


def sp_norm_components(
    f: np.ndarray,
    grid: VelocityGrid,
    dt: float,
    dx: float | tuple[float, ...],
    x_axes: Mapping[int, int] | None = None,
    spec: WeightSpec | None = None,
) -> SpNormComponents:
    """Component norms of a time series f of shape (n_t, *x_shape, n, n, n).

    Yf = d_t f + v . grad_x f uses centered differences in t (interior time
    levels only) and in x; `x_axes` maps spatial axis index to the velocity
    component it pairs with (default: one slab axis paired with v3).
    """
    f = np.asarray(f, dtype=float)
    if f.ndim < 4 or f.shape[0] < 3:
        raise PreconditionError("S_p components need at least three time levels", module="spaces")
    spec = spec or WeightSpec()
    n_x = f.ndim - 4
    x_axes = dict(x_axes) if x_axes is not None else ({0: 2} if n_x == 1 else {a: a for a in range(n_x)})
    x_cell = float(np.prod((dx,) * n_x if np.isscalar(dx) else dx)) if n_x else 1.0
    interior = f[1:-1]
    dtf = (f[2:] - f[:-2]) / (2.0 * dt)
    yf = np.stack([dtf[k] + _transport_part(interior[k], grid, dx, x_axes) for k in range(len(interior))])
    grad_v, hess_v = _velocity_derivatives(interior, grid.spacing)
    measure = dt * x_cell

    def norm(values):
        return weighted_norm(values, grid, spec, x_cell=measure)

    return SpNormComponents(f=norm(interior), grad_v=norm(grad_v), hess_v=norm(hess_v), transport=norm(yf))


def initial_value_norm(
    u: np.ndarray,
    grid: VelocityGrid,
    dx: float | tuple[float, ...],
    x_axes: Mapping[int, int] | None = None,
    spec: WeightSpec | None = None,
) -> dict[str, float]:
    """||(|u| + |v.grad_x u| + |grad_v u| + |D^2_v u|)||_{p,theta} plus the weighted sup over the x-boundary cells."""
    u = np.asarray(u, dtype=float)
    spec = spec or WeightSpec()
    n_x = u.ndim - 3
    x_axes = dict(x_axes) if x_axes is not None else ({0: 2} if n_x == 1 else {a: a for a in range(n_x)})
    x_cell = float(np.prod((dx,) * n_x if np.isscalar(dx) else dx)) if n_x else 1.0
    grad_v, hess_v = _velocity_derivatives(u, grid.spacing)
    transport = np.abs(_transport_part(u, grid, dx, x_axes))
    interior = weighted_norm(np.abs(u) + transport + grad_v + hess_v, grid, spec, x_cell=x_cell)
    trace = 0.0
    weight = grid.bracket(spec.theta)
    for axis in range(n_x):
        for edge in (0, -1):
            trace = max(trace, float(np.max(np.abs(np.take(u, edge, axis=axis)) * weight)))
    return {"interior": interior, "trace_sup": trace, "total": interior + trace}
