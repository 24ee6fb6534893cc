"""
Boundary-flattening charts.

A chart is a boundary graph x3 = rho(x1, x2) near a boundary point. The map

    psi^{-1}(y) = (y1, y2, rho(y1, y2)) + y3 (-rho_1, -rho_2, 1)

sends the half space {y3 <= 0} to the domain side, M = dx/dy is its Jacobian
and chart velocities are w = M^{-1} v. Everything here is vectorized over
leading axes: points are (..., 3) arrays, matrices (..., 3, 3).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Union

import numpy as np
from loguru import logger

from ..config import UNIT_TOL
from ..errors import (
    ChartRangeError,
    ChartSingularityError,
    ConfigurationError,
    NormalizationError,
)
from . import config
from .expression import compile_derivatives, parse_expression

R = np.diag([1.0, 1.0, -1.0])


@dataclass(frozen=True)
class ChartDerivatives:
    rho: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    r11: np.ndarray
    r12: np.ndarray
    r22: np.ndarray
    r111: np.ndarray
    r112: np.ndarray
    r122: np.ndarray
    r222: np.ndarray


class BoundaryChart:
    """Boundary graph rho with analytic derivatives up to third order."""

    name = "chart"

    def __init__(self, radius: float = config.CHART_RADIUS) -> None:
        if not radius > 0:
            raise ConfigurationError(f"chart radius must be positive, got {radius}", module="geometry")
        self.radius = float(radius)

    def derivatives(self, y1: np.ndarray, y2: np.ndarray) -> ChartDerivatives:
        raise NotImplementedError

    def params(self) -> dict[str, Any]:
        return {}

    def describe(self) -> dict[str, Any]:
        return {"preset": self.name, "radius": self.radius, **self.params()}

    def gradient_consistency(self, y12: np.ndarray, step: float = config.FD_STEP) -> float:
        """Max deviation of centered differences of rho from (rho_1, rho_2)."""
        y1, y2 = y12[..., 0], y12[..., 1]
        d = self.derivatives(y1, y2)
        fd1 = (self.derivatives(y1 + step, y2).rho - self.derivatives(y1 - step, y2).rho) / (2 * step)
        fd2 = (self.derivatives(y1, y2 + step).rho - self.derivatives(y1, y2 - step).rho) / (2 * step)
        return float(max(np.max(np.abs(fd1 - d.r1)), np.max(np.abs(fd2 - d.r2))))


def _zeros_like(y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
    return np.zeros(np.broadcast(np.asarray(y1), np.asarray(y2)).shape)


class FlatChart(BoundaryChart):
    name = "flat"

    def derivatives(self, y1, y2):
        z = _zeros_like(y1, y2)
        return ChartDerivatives(*(z for _ in range(10)))


class ParaboloidChart(BoundaryChart):
    """rho = c1 y1^2 + c2 y2^2."""

    name = "paraboloid"

    def __init__(self, c1: float = 0.3, c2: float = 0.2, radius: float = config.CHART_RADIUS):
        super().__init__(radius)
        self.c1, self.c2 = float(c1), float(c2)

    def params(self):
        return {"c1": self.c1, "c2": self.c2}

    def derivatives(self, y1, y2):
        y1, y2 = np.broadcast_arrays(np.asarray(y1, dtype=float), np.asarray(y2, dtype=float))
        z = np.zeros(y1.shape)
        return ChartDerivatives(
            rho=self.c1 * y1**2 + self.c2 * y2**2,
            r1=2 * self.c1 * y1,
            r2=2 * self.c2 * y2,
            r11=z + 2 * self.c1,
            r12=z,
            r22=z + 2 * self.c2,
            r111=z,
            r112=z,
            r122=z,
            r222=z,
        )


class SinusoidalChart(BoundaryChart):
    """rho = eps sin(k1 y1) cos(k2 y2)."""

    name = "sinusoidal"

    def __init__(self, eps: float = 0.1, k1: float = 2.0, k2: float = 1.5, radius: float = config.CHART_RADIUS):
        super().__init__(radius)
        self.eps, self.k1, self.k2 = float(eps), float(k1), float(k2)

    def params(self):
        return {"eps": self.eps, "k1": self.k1, "k2": self.k2}

    def derivatives(self, y1, y2):
        e, k1, k2 = self.eps, self.k1, self.k2
        s1, c1 = np.sin(k1 * np.asarray(y1, dtype=float)), np.cos(k1 * np.asarray(y1, dtype=float))
        s2, c2 = np.sin(k2 * np.asarray(y2, dtype=float)), np.cos(k2 * np.asarray(y2, dtype=float))
        return ChartDerivatives(
            rho=e * s1 * c2,
            r1=e * k1 * c1 * c2,
            r2=-e * k2 * s1 * s2,
            r11=-e * k1**2 * s1 * c2,
            r12=-e * k1 * k2 * c1 * s2,
            r22=-e * k2**2 * s1 * c2,
            r111=-e * k1**3 * c1 * c2,
            r112=e * k1**2 * k2 * s1 * s2,
            r122=-e * k1 * k2**2 * c1 * c2,
            r222=e * k2**3 * s1 * s2,
        )


class ExpressionChart(BoundaryChart):
    """rho given as an expression string such as "0.2*y1^2 - 0.1*sin(y2)"."""

    name = "expression"

    def __init__(self, expression: str, radius: float = config.CHART_RADIUS):
        super().__init__(radius)
        self.expression = expression
        self._evaluators = compile_derivatives(parse_expression(expression))

    def params(self):
        return {"expression": self.expression}

    def derivatives(self, y1, y2):
        return ChartDerivatives(**{name: fn(y1, y2) for name, fn in self._evaluators.items()})


_PRESETS: dict[str, type[BoundaryChart]] = {
    "flat": FlatChart,
    "paraboloid": ParaboloidChart,
    "sinusoidal": SinusoidalChart,
    "expression": ExpressionChart,
}


def make_chart(preset: str, **params: Any) -> BoundaryChart:
    try:
        cls = _PRESETS[preset]
    except KeyError:
        raise ConfigurationError(
            f"unknown chart preset {preset!r}; expected one of {sorted(_PRESETS)}", module="geometry"
        ) from None
    merged = {**config.PRESET_DEFAULTS.get(preset, {}), **params}
    try:
        return cls(**merged)
    except TypeError as e:
        raise ConfigurationError(f"bad parameters for chart {preset!r}: {e}", module="geometry") from e


# ---------------------------------------------------------------------------
# pointwise maps


def specular_reflect(v: np.ndarray, n: np.ndarray) -> np.ndarray:
    """R_n v = v - 2 (n.v) n for unit n."""
    v = np.asarray(v, dtype=float)
    n = np.asarray(n, dtype=float)
    norms = np.linalg.norm(n, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise NormalizationError(f"reflection normal is not unit length (|n| = {norms})", module="geometry")
    return v - 2.0 * np.sum(n * v, axis=-1, keepdims=True) * n


def _check_range(chart: BoundaryChart, y: np.ndarray) -> None:
    radii = np.linalg.norm(y, axis=-1)
    if np.any(radii > chart.radius):
        raise ChartRangeError(
            f"point with |y| = {float(np.max(radii)):.4g} outside chart radius {chart.radius}",
            module="geometry",
        )


def psi_inverse(chart: BoundaryChart, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    _check_range(chart, y)
    d = chart.derivatives(y[..., 0], y[..., 1])
    y3 = y[..., 2]
    return np.stack([y[..., 0] - y3 * d.r1, y[..., 1] - y3 * d.r2, d.rho + y3], axis=-1)


def _jacobian(d: ChartDerivatives, y3: np.ndarray) -> np.ndarray:
    one = np.ones_like(y3)
    rows = [
        [one - y3 * d.r11, -y3 * d.r12, -d.r1],
        [-y3 * d.r12, one - y3 * d.r22, -d.r2],
        [d.r1, d.r2, one],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def jacobian_matrix(chart: BoundaryChart, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """M = dx/dy and J = (det M)^2."""
    y = np.asarray(y, dtype=float)
    _check_range(chart, y)
    d = chart.derivatives(y[..., 0], y[..., 1])
    m = _jacobian(d, y[..., 2])
    det = np.linalg.det(m)
    if np.any(det <= 0):
        raise ChartSingularityError(
            f"det M = {float(np.min(det)):.4g} <= 0; chart radius too large for this boundary",
            module="geometry",
        )
    return m, det**2


def jacobian_derivatives(chart: BoundaryChart, y: np.ndarray) -> np.ndarray:
    """dM/dy_k stacked on a trailing axis: shape (..., 3, 3, 3) indexed [l, j, k]."""
    y = np.asarray(y, dtype=float)
    d = chart.derivatives(y[..., 0], y[..., 1])
    y3 = y[..., 2]
    z = np.zeros_like(y3)
    d1 = [
        [-y3 * d.r111, -y3 * d.r112, -d.r11],
        [-y3 * d.r112, -y3 * d.r122, -d.r12],
        [d.r11, d.r12, z],
    ]
    d2 = [
        [-y3 * d.r112, -y3 * d.r122, -d.r12],
        [-y3 * d.r122, -y3 * d.r222, -d.r22],
        [d.r12, d.r22, z],
    ]
    d3 = [[-d.r11, -d.r12, z], [-d.r12, -d.r22, z], [z, z, z]]
    mats = [np.stack([np.stack(r, axis=-1) for r in dk], axis=-2) for dk in (d1, d2, d3)]
    return np.stack(mats, axis=-1)


def outward_normal(chart: BoundaryChart, y12: np.ndarray) -> np.ndarray:
    y12 = np.asarray(y12, dtype=float)
    d = chart.derivatives(y12[..., 0], y12[..., 1])
    n = np.stack([-d.r1, -d.r2, np.ones_like(d.r1)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


@dataclass(frozen=True)
class ChartPoint:
    y: np.ndarray
    w: np.ndarray


def chart_forward(chart: BoundaryChart, x: np.ndarray, v: np.ndarray) -> ChartPoint:
    """Solve psi^{-1}(y) = x by damped Newton, then w = M(y)^{-1} v."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    d0 = chart.derivatives(x[..., 0], x[..., 1])
    y = np.stack([x[..., 0], x[..., 1], x[..., 2] - d0.rho], axis=-1)
    tol = config.NEWTON_TOL * np.maximum(1.0, np.linalg.norm(x, axis=-1))

    def residual(yy):
        return psi_inverse_unchecked(chart, yy) - x

    res = residual(y)
    err = np.linalg.norm(res, axis=-1)
    for iteration in range(config.NEWTON_MAX_ITER):
        active = err > tol
        if not np.any(active):
            break
        d = chart.derivatives(y[..., 0], y[..., 1])
        step = np.linalg.solve(_jacobian(d, y[..., 2]), res[..., None])[..., 0]
        alpha = np.ones(err.shape)
        for _ in range(config.NEWTON_MAX_HALVINGS):
            trial = y - alpha[..., None] * step
            trial_err = np.linalg.norm(residual(trial), axis=-1)
            worse = active & (trial_err >= err) & (trial_err > tol)
            if not np.any(worse):
                break
            alpha = np.where(worse, 0.5 * alpha, alpha)
        y = np.where(active[..., None], y - alpha[..., None] * step, y)
        res = residual(y)
        err = np.linalg.norm(res, axis=-1)
    if np.any(err > tol):
        raise ChartSingularityError(
            f"inverse chart map did not converge in {config.NEWTON_MAX_ITER} iterations "
            f"(residual {float(np.max(err)):.3e}); chart radius too large for this boundary",
            module="geometry",
        )
    _check_range(chart, y)
    m, _ = jacobian_matrix(chart, y)
    w = np.linalg.solve(m, v[..., None])[..., 0]
    return ChartPoint(y=y, w=w)


def psi_inverse_unchecked(chart: BoundaryChart, y: np.ndarray) -> np.ndarray:
    d = chart.derivatives(y[..., 0], y[..., 1])
    y3 = y[..., 2]
    return np.stack([y[..., 0] - y3 * d.r1, y[..., 1] - y3 * d.r2, d.rho + y3], axis=-1)


# ---------------------------------------------------------------------------
# transformed coefficients

MatrixSource = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]
VectorSource = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray], None]


@dataclass(frozen=True)
class TransformedCoefficients:
    A: np.ndarray
    B: np.ndarray
    X: np.ndarray


def _evaluate_source(source, x, v, shape_tail):
    if source is None:
        return np.zeros(x.shape[:-1] + shape_tail)
    if callable(source):
        return np.asarray(source(x, v), dtype=float)
    return np.broadcast_to(np.asarray(source, dtype=float), x.shape[:-1] + shape_tail)


def transport_term(chart: BoundaryChart, point: ChartPoint, m: np.ndarray | None = None) -> np.ndarray:
    """X = M^{-1} (d(Mw)/dy) w."""
    y, w = np.asarray(point.y, dtype=float), np.asarray(point.w, dtype=float)
    if m is None:
        m, _ = jacobian_matrix(chart, y)
    dm = jacobian_derivatives(chart, y)
    inner = np.einsum("...ljk,...j,...k->...l", dm, w, w)
    return np.linalg.solve(m, inner[..., None])[..., 0]


def transport_term_gradient(chart: BoundaryChart, point: ChartPoint) -> np.ndarray:
    """dX_i/dw_m, shape (..., 3, 3)."""
    y, w = np.asarray(point.y, dtype=float), np.asarray(point.w, dtype=float)
    m, _ = jacobian_matrix(chart, y)
    dm = jacobian_derivatives(chart, y)
    inner = np.einsum("...lmk,...k->...lm", dm, w) + np.einsum("...ljm,...j->...lm", dm, w)
    return np.linalg.solve(m, inner)


def transform_coefficients(
    chart: BoundaryChart, a: MatrixSource, b: VectorSource, point: ChartPoint
) -> TransformedCoefficients:
    """A = M^{-1} a M^{-T}, B = M^{-1} b, X = M^{-1} d(Mw)/dy w.

    `a` and `b` are constant arrays or callables of physical (x, v).
    """
    y, w = np.asarray(point.y, dtype=float), np.asarray(point.w, dtype=float)
    m, _ = jacobian_matrix(chart, y)
    x = psi_inverse(chart, y)
    v = np.einsum("...ij,...j->...i", m, w)
    a_hat = _evaluate_source(a, x, v, (3, 3))
    b_hat = _evaluate_source(b, x, v, (3,))
    m_inv = np.linalg.inv(m)
    big_a = m_inv @ a_hat @ np.swapaxes(m_inv, -1, -2)
    big_a = 0.5 * (big_a + np.swapaxes(big_a, -1, -2))
    big_b = np.einsum("...ij,...j->...i", m_inv, b_hat)
    return TransformedCoefficients(A=big_a, B=big_b, X=transport_term(chart, point, m))


def ellipticity_bound(chart: BoundaryChart, y: np.ndarray, delta: float) -> np.ndarray:
    """delta' with M^{-1} a M^{-T} in Sym(delta') for every a in Sym(delta)."""
    m, _ = jacobian_matrix(chart, y)
    s = np.linalg.svd(np.linalg.inv(m), compute_uv=False)
    s_max, s_min = s[..., 0], s[..., -1]
    return np.minimum(np.minimum(delta * s_min**2, delta / s_max**2), 1.0)


def fit_transport_bounds(chart: BoundaryChart, point: ChartPoint) -> dict[str, float]:
    """Smallest C with |X| <= C|w|^2 and |grad_w X| <= C|w| over the sample."""
    w_norm = np.linalg.norm(point.w, axis=-1)
    keep = w_norm > 0
    x_term = transport_term(chart, point)
    grad = transport_term_gradient(chart, point)
    c_x = np.linalg.norm(x_term, axis=-1)[keep] / w_norm[keep] ** 2
    c_g = np.linalg.norm(grad, ord=2, axis=(-2, -1))[keep] / w_norm[keep]
    return {
        "c_x": float(c_x.max()) if c_x.size else 0.0,
        "c_grad": float(c_g.max()) if c_g.size else 0.0,
    }


# ---------------------------------------------------------------------------
# cutoff blending and whole-space extension


class RadialCutoff:
    """Smooth kappa(|y|): 1 on |y| <= 3r0/4, 0 on |y| >= 7r0/8."""

    def __init__(self, radius: float) -> None:
        self.inner = 0.75 * radius
        self.outer = 0.875 * radius

    @staticmethod
    def _bump(t: np.ndarray) -> np.ndarray:
        safe = np.where(t > 0, t, 1.0)
        return np.where(t > 0, np.exp(-1.0 / safe), 0.0)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        s = np.linalg.norm(np.asarray(y, dtype=float), axis=-1)
        t = (self.outer - s) / (self.outer - self.inner)
        up, down = self._bump(t), self._bump(1.0 - t)
        return up / (up + down)


def blend_cutoff(a_field: np.ndarray, delta: float, kappa: np.ndarray | float) -> np.ndarray:
    """kappa A + delta (1 - kappa) I."""
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0) or np.any(kappa > 1) or not np.all(np.isfinite(kappa)):
        raise ConfigurationError("cutoff values must lie in [0, 1]", module="geometry")
    k = kappa[..., None, None]
    return k * np.asarray(a_field, dtype=float) + delta * (1.0 - k) * np.eye(3)


def extend_whole_space(
    field: Callable[[np.ndarray, np.ndarray], np.ndarray],
    kind: str,
    y: np.ndarray,
    w: np.ndarray,
) -> np.ndarray:
    """Mirror a half-space coefficient: R F(Ry, Rw) R (matrices) or R F(Ry, Rw) (vectors) for y3 > 0."""
    if kind not in ("matrix_a", "vector_b", "vector_x"):
        raise ConfigurationError(f"unknown extension kind {kind!r}", module="geometry")
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    upper = y[..., 2] > 0
    y_src = np.where(upper[..., None], y @ R, y)
    w_src = np.where(upper[..., None], w @ R, w)
    value = np.asarray(field(y_src, w_src), dtype=float)
    if kind == "matrix_a":
        mirrored = R @ value @ R
        return np.where(upper[..., None, None], mirrored, value)
    mirrored = value @ R
    return np.where(upper[..., None], mirrored, value)


def flattened_coefficient(
    chart: BoundaryChart, a: MatrixSource, delta: float
) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """(y, w) -> kappa A + delta (1 - kappa) I on the half space."""
    kappa = RadialCutoff(chart.radius)

    def evaluate(y, w):
        coeffs = transform_coefficients(chart, a, None, ChartPoint(y=y, w=w))
        return blend_cutoff(coeffs.A, delta, kappa(y))

    return evaluate


# ---------------------------------------------------------------------------
# boundary identities (y3 = 0)


def _boundary(y12: np.ndarray) -> np.ndarray:
    y12 = np.asarray(y12, dtype=float)
    return np.concatenate([y12, np.zeros(y12.shape[:-1] + (1,))], axis=-1)


def check_specular_preservation(chart: BoundaryChart, y12: np.ndarray, w: np.ndarray) -> np.ndarray:
    """|M Rw - R_x(M w)| at boundary points."""
    m, _ = jacobian_matrix(chart, _boundary(y12))
    w = np.asarray(w, dtype=float)
    v = np.einsum("...ij,...j->...i", m, w)
    lhs = np.einsum("...ij,...j->...i", m, w @ R)
    rhs = specular_reflect(v, outward_normal(chart, y12))
    return np.linalg.norm(lhs - rhs, axis=-1)


def check_e0(chart: BoundaryChart, y12: np.ndarray) -> np.ndarray:
    """max(|A^13|, |A^23|) at y3 = 0 for a = I."""
    y = _boundary(y12)
    coeffs = transform_coefficients(chart, np.eye(3), None, ChartPoint(y=y, w=np.zeros_like(y)))
    return np.maximum(np.abs(coeffs.A[..., 0, 2]), np.abs(coeffs.A[..., 1, 2]))


def boundary_inverse_closed_form(chart: BoundaryChart, y12: np.ndarray) -> np.ndarray:
    y12 = np.asarray(y12, dtype=float)
    d = chart.derivatives(y12[..., 0], y12[..., 1])
    z = np.zeros_like(d.r1)
    rows = [
        [1 + d.r1**2, d.r1 * d.r2, z],
        [d.r1 * d.r2, 1 + d.r2**2, z],
        [z, z, 1 + d.r1**2 + d.r2**2],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def check_e1(chart: BoundaryChart, y12: np.ndarray) -> np.ndarray:
    """Entrywise max |A^{-1} - closed form| at y3 = 0 for a = I."""
    y = _boundary(y12)
    coeffs = transform_coefficients(chart, np.eye(3), None, ChartPoint(y=y, w=np.zeros_like(y)))
    diff = np.linalg.inv(coeffs.A) - boundary_inverse_closed_form(chart, y12)
    return np.max(np.abs(diff), axis=(-2, -1))


def check_speed_invariance(chart: BoundaryChart, y12: np.ndarray, w: np.ndarray) -> np.ndarray:
    """| |M w| - |M Rw| | at y3 = 0."""
    m, _ = jacobian_matrix(chart, _boundary(y12))
    w = np.asarray(w, dtype=float)
    speed = np.linalg.norm(np.einsum("...ij,...j->...i", m, w), axis=-1)
    mirrored = np.linalg.norm(np.einsum("...ij,...j->...i", m, w @ R), axis=-1)
    return np.abs(speed - mirrored)


def sample_boundary_points(
    chart: BoundaryChart, count: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform (y1, y2) in a disk inside the chart and standard-normal w."""
    r = config.SAMPLE_RADIUS_FRACTION * chart.radius * np.sqrt(rng.random(count))
    phi = 2 * np.pi * rng.random(count)
    y12 = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
    w = rng.standard_normal((count, 3))
    logger.debug("Sampled {count} boundary points on {chart}", count=count, chart=chart.name)
    return y12, w
