"""
Finite-stencil representation of symmetric 3x3 matrices.

A matrix a is written as a = sum_k lambda_k l_k l_k^T over the nine lattice
directions e_i and e_i +- e_j (i < j) with the closed rule

    lambda_{ij,+-} = |a_ij|/2 +- a_ij/2 + delta1
    lambda_i       = a_ii - sum_{j != i} (lambda_{ij,+} + lambda_{ij,-})

Pair weights are always >= delta1. Basis weights can be negative when the
off-diagonal part dominates; `monotonicity_report` lists them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError, EllipticityError, StructuralError
from ..velocity.operators import StencilDirection, as_direction

_PAIRS = list(combinations(range(3), 2))
_SYM_INDEX = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]


@dataclass(frozen=True)
class SymMatrix3:
    """Symmetric 3x3 matrix with an optional ellipticity parameter delta."""

    entries: np.ndarray
    delta: float | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=float)
        if arr.shape != (3, 3):
            raise StructuralError(f"expected a 3x3 matrix, got {arr.shape}", module="stencil")
        if not np.array_equal(arr, arr.T):
            raise StructuralError("matrix is not exactly symmetric", module="stencil")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        if self.delta is not None:
            if not 0.0 < self.delta < 1.0:
                raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}", module="stencil")
            self.require_elliptic(self.delta)

    @classmethod
    def from_upper(cls, a11, a22, a33, a12, a13, a23, delta: float | None = None) -> "SymMatrix3":
        return cls(np.array([[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]]), delta)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def ellipticity(self) -> float:
        """Largest delta with the matrix in Sym(delta) (0 when not positive definite)."""
        eig = self.eigenvalues()
        if eig[0] <= 0:
            return 0.0
        return float(min(eig[0], 1.0 / eig[-1], 1.0))

    def require_elliptic(self, delta: float) -> None:
        eig = self.eigenvalues()
        tol = 1e-12 * max(1.0, abs(eig[-1]))
        if eig[0] < delta - tol or eig[-1] > 1.0 / delta + tol:
            raise EllipticityError(
                f"eigenvalues [{eig[0]:.6g}, {eig[-1]:.6g}] outside [{delta}, {1.0 / delta}]",
                module="stencil",
            )


def default_stencil() -> list[StencilDirection]:
    """e1, e2, e3 followed by e_i + e_j, e_i - e_j for i < j."""
    dirs = [StencilDirection(tuple(int(i == k) for k in range(3))) for i in range(3)]
    for i, j in _PAIRS:
        for sign in (1, -1):
            vec = [0, 0, 0]
            vec[i], vec[j] = 1, sign
            dirs.append(StencilDirection(tuple(vec)))
    return dirs


def stencil_coefficient_matrix(dirs: Sequence[StencilDirection]) -> np.ndarray:
    """Row k holds the six independent entries of l_k l_k^T."""
    rows = []
    for l in dirs:
        outer = np.outer(l.as_array(), l.as_array())
        rows.append([outer[i, j] for i, j in _SYM_INDEX])
    return np.array(rows)


@dataclass
class StencilDecomposition:
    dirs: list[StencilDirection]
    weights: np.ndarray
    delta1: float = 0.0
    source_delta: float | None = field(default=None)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.dirs),):
            raise StructuralError(
                f"{self.weights.shape[0] if self.weights.ndim else 0} weights for {len(self.dirs)} directions",
                module="stencil",
            )


@dataclass
class MonotonicityReport:
    monotone: bool
    min_weight: float
    min_basis_weight: float
    min_pair_weight: float
    negative: list[tuple[tuple[int, int, int], float]]

    def to_dict(self) -> dict:
        return {
            "monotone": self.monotone,
            "min_weight": self.min_weight,
            "min_basis_weight": self.min_basis_weight,
            "min_pair_weight": self.min_pair_weight,
            "negative": [{"dir": list(d), "weight": w} for d, w in self.negative],
        }


def _resolve_delta(a: SymMatrix3, delta: float | None) -> float:
    if delta is not None:
        return delta
    if a.delta is not None:
        return a.delta
    return a.ellipticity()


def _closed_rule(a: np.ndarray, delta1: np.ndarray | float) -> np.ndarray:
    """Weights for a stack of matrices a[..., 3, 3], in default-stencil order (first axis)."""
    basis = [a[..., i, i].copy() for i in range(3)]
    pairs = []
    for i, j in _PAIRS:
        aij = a[..., i, j]
        plus = 0.5 * np.abs(aij) + 0.5 * aij + delta1
        minus = 0.5 * np.abs(aij) - 0.5 * aij + delta1
        basis[i] = basis[i] - plus - minus
        basis[j] = basis[j] - plus - minus
        pairs += [plus, minus]
    return np.stack(basis + pairs, axis=0)


def decompose(
    a: SymMatrix3, delta1: float | None = None, delta: float | None = None
) -> StencilDecomposition:
    """Closed-rule decomposition of a in Sym(delta); delta1 defaults to delta/8."""
    delta = _resolve_delta(a, delta)
    if not 0.0 < delta <= 1.0:
        raise EllipticityError(f"matrix is not uniformly elliptic (delta={delta})", module="stencil")
    a.require_elliptic(delta)
    if delta1 is None:
        delta1 = delta / 8.0
    if not 0.0 <= delta1 <= delta / 8.0 + 1e-15:
        raise ConfigurationError(
            f"delta1 must lie in [0, delta/8] = [0, {delta / 8.0}], got {delta1}", module="stencil"
        )
    weights = _closed_rule(a.entries, float(delta1))
    return StencilDecomposition(default_stencil(), weights, float(delta1), delta)


def decompose_field(a_field: np.ndarray, delta1: float | np.ndarray) -> np.ndarray:
    """Nodewise closed rule for a[..., 3, 3]; returns weights with shape (9, ...)."""
    a_field = np.asarray(a_field, dtype=float)
    if a_field.shape[-2:] != (3, 3):
        raise StructuralError(f"expected (..., 3, 3), got {a_field.shape}", module="stencil")
    return _closed_rule(a_field, delta1)


def reconstruct(d: StencilDecomposition) -> SymMatrix3:
    out = np.zeros((3, 3))
    for lam, l in zip(d.weights, d.dirs):
        vec = l.as_array()
        out += lam * np.outer(vec, vec)
    return SymMatrix3(0.5 * (out + out.T))


def monotonicity_report(d: StencilDecomposition) -> MonotonicityReport:
    basis_mask = np.array([l.norm_squared() == 1 for l in d.dirs])
    w = d.weights
    negative = [(l.vector, float(lam)) for l, lam in zip(d.dirs, w) if lam < 0]
    min_basis = float(w[basis_mask].min()) if basis_mask.any() else float("nan")
    min_pair = float(w[~basis_mask].min()) if (~basis_mask).any() else float("nan")
    return MonotonicityReport(
        monotone=bool(np.all(w >= d.delta1 - 1e-15)),
        min_weight=float(w.min()),
        min_basis_weight=min_basis,
        min_pair_weight=min_pair,
        negative=negative,
    )


def decomposition_to_json(d: StencilDecomposition) -> str:
    return json.dumps(
        {
            "dirs": [list(l.vector) for l in d.dirs],
            "weights": [float(w) for w in d.weights],
            "delta1": d.delta1,
        }
    )


def decomposition_from_json(text: str) -> StencilDecomposition:
    payload = json.loads(text)
    return StencilDecomposition(
        [as_direction(v) for v in payload["dirs"]],
        np.array(payload["weights"], dtype=float),
        float(payload["delta1"]),
    )
