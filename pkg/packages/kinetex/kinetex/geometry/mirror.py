"""
Mirror extension across the flattened boundary {y3 = 0} and the boundary
antisymmetry of Landau-kernel convolutions.

For a half-space field u~ = u^ J the extension is

    u_bar(y, w) = u~(y, w)      for y3 <= 0
                = u~(Ry, Rw)    for y3 > 0,   R = diag(1, 1, -1).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from loguru import logger

from ..landau.kernel import kernel_phi_table
from . import config
from .charts import (
    R,
    BoundaryChart,
    check_speed_invariance,
    jacobian_matrix,
    sample_boundary_points,
)

FieldFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
Profile = Callable[[np.ndarray], np.ndarray]


@dataclass
class HalfSpaceField:
    """u(y, w) on y3 <= 0 with an optional Jacobian weight J(y)."""

    fn: FieldFn
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None

    @classmethod
    def on_chart(cls, fn: FieldFn, chart: BoundaryChart) -> "HalfSpaceField":
        return cls(fn, lambda y: jacobian_matrix(chart, y)[1])

    def tilde(self, y: np.ndarray, w: np.ndarray) -> np.ndarray:
        value = np.asarray(self.fn(y, w), dtype=float)
        if self.jacobian is None:
            return value
        weight = np.asarray(self.jacobian(y), dtype=float)
        return value * weight.reshape(weight.shape + (1,) * (value.ndim - weight.ndim))


@dataclass
class ExtendedField:
    source: HalfSpaceField

    def __call__(self, y: np.ndarray, w: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        w = np.asarray(w, dtype=float)
        upper = y[..., 2] > 0
        y_src = np.where(upper[..., None], y @ R, y)
        w_src = np.where(upper[..., None], w @ R, w)
        return self.source.tilde(y_src, w_src)


def mirror_extend(f: HalfSpaceField) -> ExtendedField:
    return ExtendedField(f)


@dataclass
class JumpReport:
    max_jump: float
    sample_count: int
    offset: float
    worst_point: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _one_sided(fn: FieldFn, y12: np.ndarray, w: np.ndarray, sign: float, s: float) -> np.ndarray:
    def at(offset):
        y = np.concatenate([y12, np.full(y12.shape[:-1] + (1,), sign * offset)], axis=-1)
        return np.asarray(fn(y, w), dtype=float)

    return 2.0 * at(0.5 * s) - at(s)


def continuity_probe(
    f: FieldFn,
    sample_count: int,
    rng: np.random.Generator,
    chart: BoundaryChart | None = None,
    offset: float = config.PROBE_OFFSET,
) -> JumpReport:
    """Largest jump of f across y3 = 0 over sampled (y1, y2, w).

    One-sided limits are linear extrapolations from y3 = +-offset/2 and
    +-offset, so smooth drift in y3 does not register as a jump.
    """
    if chart is not None:
        y12, w = sample_boundary_points(chart, sample_count, rng)
    else:
        y12 = rng.uniform(-0.5, 0.5, size=(sample_count, 2))
        w = rng.standard_normal((sample_count, 3))
    lower = _one_sided(f, y12, w, -1.0, offset)
    upper = _one_sided(f, y12, w, 1.0, offset)
    jumps = np.abs(lower - upper).reshape(sample_count, -1).max(axis=1)
    worst = int(np.argmax(jumps)) if sample_count else 0
    return JumpReport(
        max_jump=float(jumps.max()) if sample_count else 0.0,
        sample_count=sample_count,
        offset=offset,
        worst_point=[*y12[worst].tolist(), *w[worst].tolist()] if sample_count else [],
    )


# ---------------------------------------------------------------------------
# boundary antisymmetry of Phi * u


def chart_velocity_profile(chart: BoundaryChart, y12: np.ndarray, fn: Profile) -> Profile:
    """Express a profile given in chart velocity w as a function of physical velocity v."""
    y = np.array([y12[0], y12[1], 0.0])
    m, _ = jacobian_matrix(chart, y)
    m_inv = np.linalg.inv(m)
    return lambda v: fn(np.asarray(v) @ m_inv.T)


def lattice_convolution(
    v: np.ndarray, profile: Profile, half_width: float, cells: int
) -> tuple[np.ndarray, float]:
    """Phi * u at v by midpoint quadrature on a lattice centered at v over [-V, V]^3.

    The cell containing v contributes the exact cube integral of Phi times
    u(v). Returns the 3x3 value and the profile mass in the outermost cell
    layer as a tail indicator.
    """
    h = 2.0 * half_width / cells
    reach = int(np.ceil((half_width + np.max(np.abs(v))) / h))
    k = np.arange(-reach, reach + 1)
    offsets = np.stack(np.meshgrid(k, k, k, indexing="ij"), axis=-1) * h
    nodes = v + offsets
    inside = np.all(np.abs(nodes) <= half_width, axis=-1)
    values = np.where(inside, np.asarray(profile(nodes), dtype=float), 0.0)
    kernel = kernel_phi_table(-offsets, h)
    total = np.einsum("abcij,abc->ij", kernel, values) * h**3
    shell = inside & np.any(np.abs(nodes) > half_width - h, axis=-1)
    tail = float(np.sum(np.abs(values[shell])) * h**3)
    return total, tail


@dataclass
class AntisymmetryReport:
    chart: dict
    point: list[float]
    residual: float
    residual_coarse: float
    quad_error_estimate: float
    tolerance: float
    tail: float
    speed_invariance: float
    resolutions: tuple[int, int]

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def to_record(self) -> dict:
        return {
            "check": "boundary_convolution_antisymmetry",
            "chart": self.chart,
            "point": self.point,
            "residual": self.residual,
            "quad_error_estimate": self.quad_error_estimate,
            "tolerance": self.tolerance,
            "tail": self.tail,
            "speed_invariance": self.speed_invariance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record())


def _frame_residual(
    chart: BoundaryChart,
    profile_w: Profile,
    y12: np.ndarray,
    w: np.ndarray,
    half_width: float,
    cells: int,
    radial_weight: Callable[[float], float] | None,
) -> tuple[float, float]:
    y = np.array([y12[0], y12[1], 0.0])
    m, _ = jacobian_matrix(chart, y)
    m_inv = np.linalg.inv(m)
    profile_v = chart_velocity_profile(chart, y12, profile_w)
    frames, tail = [], 0.0
    for ww in (w, R @ w):
        v = m @ ww
        u_conv, t = lattice_convolution(v, profile_v, half_width, cells)
        frame = m_inv @ u_conv @ m_inv.T
        if radial_weight is not None:
            frame = frame * radial_weight(float(np.linalg.norm(v)))
        frames.append(frame)
        tail = max(tail, t)
    res = max(abs(frames[0][i, 2] + frames[1][i, 2]) for i in (0, 1))
    return float(res), tail


def convolution_antisymmetry_check(
    chart: BoundaryChart,
    profile: Profile,
    y12: np.ndarray,
    w: np.ndarray,
    half_width: float = config.E3_BOX,
    resolutions: tuple[int, int] = config.E3_RESOLUTIONS,
    radial_weight: Callable[[float], float] | None = None,
) -> AntisymmetryReport:
    """Residual of U^{i3}(w) = -U^{i3}(Rw), i = 1, 2, for U = M^{-1}(Phi * u)M^{-T}.

    `profile` is a function of chart velocity w at the boundary point. The
    residual at the finer resolution is compared with a Richardson estimate
    of the quadrature error built from both resolutions.
    """
    y12 = np.asarray(y12, dtype=float)
    w = np.asarray(w, dtype=float)
    speed = float(check_speed_invariance(chart, y12, w))
    if speed > config.E5_TOL:
        logger.warning(
            "speed invariance violated before antisymmetry check: {res:.3e}", res=speed
        )
    n1, n2 = resolutions
    res1, _ = _frame_residual(chart, profile, y12, w, half_width, n1, radial_weight)
    res2, tail = _frame_residual(chart, profile, y12, w, half_width, n2, radial_weight)
    ratio = (n2 / n1) ** 2
    estimate = abs(res2 - res1) / (ratio - 1.0)
    if tail > config.E3_TAIL_WARNING:
        logger.warning(
            "profile mass {tail:.3e} near the quadrature box edge (V = {box})", tail=tail, box=half_width
        )
    return AntisymmetryReport(
        chart=chart.describe(),
        point=[*y12.tolist(), *w.tolist()],
        residual=res2,
        residual_coarse=res1,
        quad_error_estimate=estimate,
        tolerance=max(5.0 * estimate, config.E3_FLOOR),
        tail=tail,
        speed_invariance=speed,
        resolutions=(n1, n2),
    )


def maxwellian_profile(chart: BoundaryChart, y12: np.ndarray) -> Profile:
    """mu(M w): the Maxwellian of the physical velocity, even under w3 -> -w3."""
    y = np.array([y12[0], y12[1], 0.0])
    m, _ = jacobian_matrix(chart, y)

    def profile(w):
        v = np.asarray(w) @ m.T
        return np.pi ** -1.5 * np.exp(-np.sum(v**2, axis=-1))

    return profile


def odd_control_profile(chart: BoundaryChart, y12: np.ndarray) -> Profile:
    """w3 mu(M w): violates the specular symmetry."""
    base = maxwellian_profile(chart, y12)
    return lambda w: np.asarray(w)[..., 2] * base(w)


__all__ = [
    "AntisymmetryReport",
    "ExtendedField",
    "HalfSpaceField",
    "JumpReport",
    "chart_velocity_profile",
    "continuity_probe",
    "convolution_antisymmetry_check",
    "lattice_convolution",
    "maxwellian_profile",
    "mirror_extend",
    "odd_control_profile",
]
