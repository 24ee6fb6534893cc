"""
Landau kernel Phi(z) = (I - z z^T/|z|^2)/|z|, its divergence
b_j(z) = d_i Phi^{ij}(z) = -2 z_j/|z|^3 and the Maxwellian.

Lattice tables replace the singular center cell by exact cube integrals:
the cell [-h/2, h/2]^3 carries int Phi = (2/3) C h^2 I with
C = int_{[-1/2,1/2]^3} |z|^{-1} dz = 3 ln(2 + sqrt 3) - pi/2.
"""

from __future__ import annotations

import numpy as np

from ..errors import SingularityError

CUBE_INVERSE_DISTANCE = 3.0 * np.log(2.0 + np.sqrt(3.0)) - 0.5 * np.pi

# Upper-triangle channel order used by all tabulated symmetric matrices
SYM_CHANNELS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


def kernel_phi(v: np.ndarray) -> np.ndarray:
    """Phi(v) for v != 0, vectorized over leading axes."""
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(v, axis=-1)
    if np.any(r == 0):
        raise SingularityError("Phi is singular at v = 0", module="landau")
    vhat = v / r[..., None]
    return (np.eye(3) - vhat[..., :, None] * vhat[..., None, :]) / r[..., None, None]


def kernel_divergence(z: np.ndarray) -> np.ndarray:
    """b(z) = -2 z/|z|^3 for z != 0."""
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    if np.any(r == 0):
        raise SingularityError("the kernel divergence is singular at z = 0", module="landau")
    return -2.0 * z / r[..., None] ** 3


def kernel_phi_table(z: np.ndarray, h: float) -> np.ndarray:
    """Phi on lattice offsets z; the zero offset holds the cell average of Phi."""
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    center = r == 0
    safe = np.where(center[..., None], 1.0, z)
    table = kernel_phi(safe)
    table[center] = (2.0 / 3.0) * CUBE_INVERSE_DISTANCE / h * np.eye(3)
    return table


def kernel_divergence_table(z: np.ndarray, h: float, correct_center: bool = True) -> np.ndarray:
    """b_j(z) = -2 z_j/|z|^3 on lattice offsets z, shape (..., 3).

    The center cell of the odd kernel integrates to (2/3) C h^2 d_j F(v)
    against a smooth F; with `correct_center` this is folded into the
    +-h e_j entries as a centered difference.
    """
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    center = r == 0
    safe_r = np.where(center, 1.0, r)
    table = np.where(center[..., None], 0.0, -2.0 * z / safe_r[..., None] ** 3)
    if correct_center:
        extra = CUBE_INVERSE_DISTANCE / (3.0 * h**2)
        for j in range(3):
            axis_hit = np.isclose(np.abs(z[..., j]), h) & np.all(
                np.delete(z, j, axis=-1) == 0, axis=-1
            )
            table[..., j] += np.where(axis_hit, np.sign(z[..., j]) * -extra, 0.0)
    return table


def maxwellian_values(v: np.ndarray) -> np.ndarray:
    """mu(v) = pi^{-3/2} exp(-|v|^2)."""
    return np.pi**-1.5 * np.exp(-np.sum(np.asarray(v, dtype=float) ** 2, axis=-1))


def sym_to_full(channels: np.ndarray) -> np.ndarray:
    """(..., 6) upper-triangle channels -> (..., 3, 3)."""
    out = np.empty(channels.shape[:-1] + (3, 3))
    for c, (i, j) in enumerate(SYM_CHANNELS):
        out[..., i, j] = channels[..., c]
        out[..., j, i] = channels[..., c]
    return out


def full_to_sym(mats: np.ndarray) -> np.ndarray:
    return np.stack([mats[..., i, j] for i, j in SYM_CHANNELS], axis=-1)
