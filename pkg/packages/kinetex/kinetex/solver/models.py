"""
Slab domain, solver configuration and the per-step records.

The phase-space state is an (n_x, n, n, n) array: spatial cells along x3
first, then the velocity lattice. Cell j is centered at (j + 1/2) dx.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Callable, Literal, Union

import numpy as np

from .. import config as package_config
from ..errors import ConfigurationError, EllipticityError, StructuralError
from ..landau import KForm
from ..velocity import GridField, VelocityGrid
from . import config

# Constant, array broadcastable to (n_x, n, n, n), or f(t, x, v) with
# x of shape (n_x, 1, 1, 1) and v of shape (1, n, n, n, 3)
FieldSource = Union[float, np.ndarray, Callable[[float, np.ndarray, np.ndarray], np.ndarray]]
Scheme = Literal["implicit", "explicit"]
BoxClosure = Literal["no_flux", "absorbing"]


@dataclass(frozen=True)
class SlabDomain:
    """Interval (0, L) along x3 split into n_x cells; walls at x3 = 0 and x3 = L."""

    length: float
    n_x: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.length) or self.length <= 0:
            raise ConfigurationError(f"slab length must be positive, got {self.length}", module="solver")
        if isinstance(self.n_x, bool) or int(self.n_x) != self.n_x or self.n_x < 2:
            raise ConfigurationError(f"n_x must be an integer >= 2, got {self.n_x}", module="solver")

    @property
    def dx(self) -> float:
        return self.length / self.n_x

    def centers(self) -> np.ndarray:
        return (np.arange(self.n_x) + 0.5) * self.dx


@dataclass(frozen=True)
class KfpMode:
    """Constant or velocity-dependent diffusion a, optional drift b with bound K."""

    a: np.ndarray
    b: np.ndarray | None = None
    delta: float | None = None
    delta1: float | None = None
    b_bound: float | None = None

    def __post_init__(self) -> None:
        a = np.array(self.a, dtype=float)
        if a.shape[-2:] != (3, 3) or a.ndim not in (2, 5):
            raise StructuralError(f"a must be (3, 3) or (n, n, n, 3, 3), got {a.shape}", module="solver")
        if not np.array_equal(a, np.swapaxes(a, -1, -2)):
            raise StructuralError("diffusion matrix is not symmetric", module="solver")
        eig = np.linalg.eigvalsh(a)
        delta = self.delta
        if delta is None:
            delta = float(min(eig[..., 0].min(), 1.0 / eig[..., -1].max(), 1.0))
            object.__setattr__(self, "delta", delta)
        tol = 1e-12 * max(1.0, float(eig[..., -1].max()))
        if not 0.0 < delta <= 1.0 or eig[..., 0].min() < delta - tol or eig[..., -1].max() > 1.0 / delta + tol:
            raise EllipticityError(
                f"a is not in Sym({delta}): eigenvalues in [{eig[..., 0].min():.6g}, {eig[..., -1].max():.6g}]",
                module="solver",
            )
        object.__setattr__(self, "a", a)
        if self.b is not None:
            b = np.array(self.b, dtype=float)
            if b.shape[-1] != 3 or b.ndim not in (1, 4):
                raise StructuralError(f"b must be (3,) or (n, n, n, 3), got {b.shape}", module="solver")
            if self.b_bound is not None and np.max(np.abs(b)) > self.b_bound:
                raise ConfigurationError(
                    f"|b|_inf = {np.max(np.abs(b)):.6g} exceeds the bound K = {self.b_bound}", module="solver"
                )
            object.__setattr__(self, "b", b)
        if self.delta1 is not None and not 0.0 <= self.delta1 <= delta / 8.0 + 1e-15:
            raise ConfigurationError(
                f"delta1 must lie in [0, delta/8] = [0, {delta / 8.0}], got {self.delta1}", module="solver"
            )

    @property
    def floor(self) -> float:
        return self.delta / 8.0 if self.delta1 is None else self.delta1

    @property
    def has_drift(self) -> bool:
        return self.b is not None and bool(np.any(self.b))


@dataclass(frozen=True)
class LandauMode:
    """Linearized Landau collisions about a frozen g with viscosity nu."""

    nu: float
    g: GridField | None = None
    form: KForm = "symmetric"

    def __post_init__(self) -> None:
        if not np.isfinite(self.nu) or self.nu <= 0:
            raise ConfigurationError(f"viscosity nu must be positive, got {self.nu}", module="solver")
        if self.form not in ("regularized", "symmetric"):
            raise ConfigurationError(f"unknown K form {self.form!r}", module="solver")


@dataclass(frozen=True)
class SolverConfig:
    domain: SlabDomain
    grid: VelocityGrid
    mode: KfpMode | LandauMode
    dt: float
    lam: float = 0.0
    eps_bc: float = 0.0
    source: FieldSource = 0.0
    initial: FieldSource = 0.0
    theta: float = 0.0
    scheme: Scheme = "implicit"
    closure: BoxClosure = config.DEFAULT_CLOSURE
    collision: bool = True
    threads: int = package_config.THREADS
    checkpoint_every: int | None = None

    def __post_init__(self) -> None:
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}", module="solver")
        if not 0.0 <= self.eps_bc <= 1.0:
            raise ConfigurationError(f"eps_bc must lie in [0, 1], got {self.eps_bc}", module="solver")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ConfigurationError(f"lambda must be nonnegative, got {self.lam}", module="solver")
        if self.scheme not in ("implicit", "explicit"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}", module="solver")
        if self.closure not in ("no_flux", "absorbing"):
            raise ConfigurationError(f"unknown velocity-box closure {self.closure!r}", module="solver")
        if self.threads < 1:
            raise ConfigurationError(f"threads must be >= 1, got {self.threads}", module="solver")
        if self.checkpoint_every is not None and self.checkpoint_every < 1:
            raise ConfigurationError("checkpoint_every must be a positive step count", module="solver")
        if isinstance(self.mode, KfpMode) and self.mode.a.ndim == 5 and self.mode.a.shape[:3] != self.grid.shape:
            raise StructuralError("diffusion field does not match the velocity grid", module="solver")
        if isinstance(self.mode, LandauMode) and self.mode.g is not None and self.mode.g.grid != self.grid:
            raise StructuralError("g lives on a different velocity grid", module="solver")

    @property
    def state_shape(self) -> tuple[int, int, int, int]:
        return (self.domain.n_x, *self.grid.shape)

    def evaluate(self, src: FieldSource, t: float) -> np.ndarray:
        """Sample a constant, array or callable field on the phase-space lattice."""
        if callable(src):
            x = self.domain.centers().reshape(-1, 1, 1, 1)
            values = src(t, x, self.grid.mesh()[None])
        else:
            values = src
        try:
            out = np.broadcast_to(np.asarray(values, dtype=float), self.state_shape)
        except ValueError as e:
            raise StructuralError(f"field does not broadcast to {self.state_shape}: {e}", module="solver") from e
        return np.array(out)


@dataclass
class PhaseField:
    domain: SlabDomain
    grid: VelocityGrid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.domain.n_x, *self.grid.shape)
        if self.values.shape != expected:
            raise StructuralError(f"phase field shape {self.values.shape}, expected {expected}", module="solver")
        if not np.all(np.isfinite(self.values)):
            raise StructuralError("phase field holds non-finite values", module="solver")

    @classmethod
    def initial(cls, cfg: SolverConfig) -> "PhaseField":
        return cls(cfg.domain, cfg.grid, cfg.evaluate(cfg.initial, 0.0), 0.0)

    @property
    def cell_measure(self) -> float:
        return self.domain.dx * self.grid.cell_volume

    def with_values(self, values: np.ndarray, t: float | None = None) -> "PhaseField":
        return PhaseField(self.domain, self.grid, values, self.t if t is None else t)

    def mass(self) -> float:
        return float(np.sum(self.values) * self.cell_measure)

    def energy(self, theta: float = 0.0) -> float:
        """||f||^2 in L_{2,theta} over the slab."""
        return float(np.sum(self.values**2 * self.grid.bracket(theta)) * self.cell_measure)

    def pairing(self, other: np.ndarray, theta: float = 0.0) -> float:
        return float(np.sum(self.values * other * self.grid.bracket(theta)) * self.cell_measure)

    def linf(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


@dataclass
class TraceRecord:
    """Wall traces of one step: outgoing f+ and the incoming values f- = (1 - eps) f+(Rv).

    Per wall the arrays are (n, n, (n - 1) / 2) over the v3 half that leaves
    (outgoing) or enters (incoming) the slab, ordered by increasing v3.
    `residual` is measured on the transported field (see `incoming_residual`)
    and stays 0 until the step fills it in.
    """

    outgoing: tuple[np.ndarray, np.ndarray]
    incoming: tuple[np.ndarray, np.ndarray]
    eps_bc: float
    residual: float = 0.0


@dataclass
class StepDiagnostics:
    """Audited quantities after one step; the first ten fields are the CSV columns."""

    t: float
    E_theta: float
    dissipation: float
    linf: float
    mass: float
    flux_plus: float
    flux_minus: float
    trunc_flux: float
    energy_residual: float
    maxprin_residual: float
    mass_residual: float = 0.0
    trace_residual: float = 0.0
    transport_slack: float = 0.0
    wall_flux_plus: tuple[float, float] = (0.0, 0.0)
    wall_flux_minus: tuple[float, float] = (0.0, 0.0)
    energy_scale: float = 0.0
    landau_constant: float | None = None
    extra: dict = field(default_factory=dict)

    def row(self) -> list[float]:
        return [float(getattr(self, name)) for name in config.DIAGNOSTIC_COLUMNS]

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "extra"}
        out["wall_flux_plus"] = list(self.wall_flux_plus)
        out["wall_flux_minus"] = list(self.wall_flux_minus)
        out.update(self.extra)
        return out

    @property
    def energy_passed(self) -> bool:
        return self.energy_residual <= config.AUDIT_RTOL * max(self.energy_scale, np.finfo(float).tiny)
