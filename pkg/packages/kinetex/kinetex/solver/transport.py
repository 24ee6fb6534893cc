"""
Semi-Lagrangian transport along x3 with eps-relaxed specular walls.

The slab is unfolded into a periodic lattice of 2 n_x cells: unfolded cell m
is physical cell m for m < n_x and the mirror image 2 n_x - 1 - m, sampled at
the reflected velocity, otherwise. Every wall crossed on the way back along a
characteristic multiplies the sampled value by (1 - eps).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..errors import StepSizeError
from . import config
from .models import PhaseField, TraceRecord


def trace_foot(x: float, v3: float, dt: float, length: float) -> tuple[float, bool, int]:
    """Foot of the characteristic through (x, v3): (position, velocity flipped, bounces)."""
    p = x - v3 * dt
    sheet = math.floor(p / length)
    r = p % (2.0 * length)
    flipped = r >= length
    return (2.0 * length - r if flipped else r), flipped, abs(sheet)


def unfold(j: np.ndarray, n_x: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Physical cell, flip flag and bounce count of unfolded lattice indices j."""
    m = np.mod(j, 2 * n_x)
    flipped = m >= n_x
    cell = np.where(flipped, 2 * n_x - 1 - m, m)
    return cell, flipped, np.abs(np.floor_divide(j, n_x))


@njit
def _gather(values, lo_cell, lo_k, lo_w, hi_cell, hi_k, hi_w, alpha, out):
    n_x, n1, n2, n3 = values.shape
    for j in range(n_x):
        for k3 in range(n3):
            c0 = lo_cell[j, k3]
            c1 = hi_cell[j, k3]
            q0 = lo_k[j, k3]
            q1 = hi_k[j, k3]
            w0 = lo_w[j, k3]
            w1 = hi_w[j, k3]
            a = alpha[j, k3]
            for i1 in range(n1):
                for i2 in range(n2):
                    f0 = w0 * values[c0, i1, i2, q0]
                    f1 = w1 * values[c1, i1, i2, q1]
                    out[j, i1, i2, k3] = f0 + a * (f1 - f0)


class TransportPlan:
    """Interpolation stencil of one step, shared by every velocity (v1, v2)."""

    def __init__(self, n_x: int, dx: float, v3: np.ndarray, dt: float, eps_bc: float):
        n3 = v3.size
        s = np.arange(n_x)[:, None] - v3[None, :] * dt / dx
        lo = np.floor(s).astype(np.int64)
        self.alpha = s - lo
        k3 = np.broadcast_to(np.arange(n3), lo.shape)
        keep = 1.0 - eps_bc
        parts = []
        for index in (lo, lo + 1):
            cell, flipped, bounces = unfold(index, n_x)
            parts.append(
                (
                    cell.astype(np.int64),
                    np.where(flipped, n3 - 1 - k3, k3).astype(np.int64),
                    keep ** bounces.astype(float),
                    bounces,
                )
            )
        self.max_bounces = int(max(parts[0][3].max(), parts[1][3].max()))
        if self.max_bounces > config.MAX_BOUNCES:
            raise StepSizeError(
                f"dt = {dt} lets a characteristic bounce {self.max_bounces} times "
                f"(at most {config.MAX_BOUNCES})",
                module="solver",
            )
        (self.lo_cell, self.lo_k, self.lo_w, _), (self.hi_cell, self.hi_k, self.hi_w, _) = parts

    def apply(self, values: np.ndarray) -> np.ndarray:
        out = np.empty_like(values)
        _gather(
            np.ascontiguousarray(values),
            self.lo_cell,
            self.lo_k,
            self.lo_w,
            self.hi_cell,
            self.hi_k,
            self.hi_w,
            self.alpha,
            out,
        )
        return out


def wall_traces(f: PhaseField, eps_bc: float) -> TraceRecord:
    """Outgoing values at both walls and the incoming values the boundary law assigns them."""
    n_x = f.domain.n_x
    c = f.grid.center_index
    keep = 1.0 - eps_bc
    incoming = []
    for ghost_index, half in ((-1, slice(c + 1, None)), (n_x, slice(0, c))):
        cell, flipped, bounces = unfold(np.array([ghost_index]), n_x)
        ghost = f.values[int(cell[0])]
        if flipped[0]:
            ghost = ghost[..., ::-1]
        incoming.append(keep ** int(bounces[0]) * ghost[..., half])
    outgoing = (f.values[0][..., :c], f.values[-1][..., c + 1 :])
    return TraceRecord(outgoing=outgoing, incoming=(incoming[0], incoming[1]), eps_bc=eps_bc)


def incoming_residual(before: PhaseField, after: PhaseField, dt: float, eps_bc: float) -> float:
    """max |after - expected| over the incoming velocities of both wall cells.

    The expected value interpolates `before` linearly at the foot x - v3 dt,
    past each wall extended by the boundary law f-(v) = (1 - eps) f+(Rv).
    Velocities whose foot lies beyond one mirror image of the slab are skipped.
    """
    n_x, dx = before.domain.n_x, before.domain.dx
    v3 = before.grid.axis()
    n3 = v3.size
    c = before.grid.center_index
    keep = 1.0 - eps_bc
    values = before.values

    def sample(i: int, k3: int) -> np.ndarray | None:
        if 0 <= i < n_x:
            return values[i, ..., k3]
        if -n_x <= i < 0:
            return keep * values[-1 - i, ..., n3 - 1 - k3]
        if n_x <= i < 2 * n_x:
            return keep * values[2 * n_x - 1 - i, ..., n3 - 1 - k3]
        return None

    worst = 0.0
    for j, half in ((0, range(c + 1, n3)), (n_x - 1, range(0, c))):
        for k3 in half:
            s = j - v3[k3] * dt / dx
            lo = math.floor(s)
            f0, f1 = sample(lo, k3), sample(lo + 1, k3)
            if f0 is None or f1 is None:
                continue
            expected = f0 + (s - lo) * (f1 - f0)
            worst = max(worst, float(np.max(np.abs(after.values[j, ..., k3] - expected))))
    return worst


def absorbed_energy(f: PhaseField, plan: TransportPlan, specular: TransportPlan, theta: float = 0.0) -> float:
    """Weighted energy one transport step loses to the eps part of the walls."""
    moved = f.with_values(plan.apply(f.values))
    reflected = f.with_values(specular.apply(f.values))
    return reflected.energy(theta) - moved.energy(theta)


def wall_fluxes(trace: TraceRecord, f: PhaseField, theta: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """(flux+, flux-) per wall: sum |f|^2 <v>^theta |v3| h^3 over the outgoing and incoming halves."""
    grid = f.grid
    c = grid.center_index
    weight = grid.bracket(theta) * np.abs(grid.mesh()[..., 2]) * grid.cell_volume
    halves = ((slice(0, c), slice(c + 1, None)), (slice(c + 1, None), slice(0, c)))
    plus, minus = [], []
    for out, inc, (out_half, in_half) in zip(trace.outgoing, trace.incoming, halves):
        plus.append(float(np.sum(out**2 * weight[..., out_half])))
        minus.append(float(np.sum(inc**2 * weight[..., in_half])))
    return (plus[0], plus[1]), (minus[0], minus[1])


def wall_mass_loss_rate(trace: TraceRecord, f: PhaseField) -> float:
    """eps * sum f+ |v3| h^3 over both walls: mass absorbed per unit time."""
    grid = f.grid
    c = grid.center_index
    speed = np.abs(grid.mesh()[..., 2]) * grid.cell_volume
    total = float(np.sum(trace.outgoing[0] * speed[..., :c]) + np.sum(trace.outgoing[1] * speed[..., c + 1 :]))
    return trace.eps_bc * total


def transport_step(f: PhaseField, dt: float, eps_bc: float = 0.0, plan: TransportPlan | None = None) -> PhaseField:
    """Advance v3 d/dx3 by dt; time is not advanced (the collision step does that)."""
    if plan is None:
        plan = TransportPlan(f.domain.n_x, f.domain.dx, f.grid.axis(), dt, eps_bc)
    return f.with_values(plan.apply(f.values))
