"""Poisson reconstruction of a (high-pass log) intensity image.

Recovers an image up to an additive constant from a Laplacian field or
from a gradient pair.  The solver inverts the 5-point Laplacian under
homogeneous Neumann boundary conditions via the cosine basis (DCT-II
diagonalizes that operator exactly); the zero-frequency mode is fixed by
normalizing the output to zero mean.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dctn, idctn


def _check_pair(gx, gy) -> tuple[np.ndarray, np.ndarray]:
    ax = np.asarray(gx, dtype=np.float64)
    ay = np.asarray(gy, dtype=np.float64)
    if ax.ndim != 2 or ay.ndim != 2:
        raise ValueError("gradient fields must be 2D")
    if ax.shape != ay.shape:
        raise ValueError(f"gradient geometry mismatch: {ax.shape} vs {ay.shape}")
    return ax, ay


def divergence(gx, gy) -> np.ndarray:
    """d(gx)/dx + d(gy)/dy with central differences in the interior and
    3-point one-sided differences at the borders."""
    ax, ay = _check_pair(gx, gy)
    return np.gradient(ax, axis=1, edge_order=2) + np.gradient(ay, axis=0, edge_order=2)


def apply_laplacian(u) -> np.ndarray:
    """5-point Laplacian with reflective (homogeneous Neumann) borders.

    This is the forward operator that ``solve_poisson`` inverts on the
    zero-mean subspace.
    """
    arr = np.asarray(u, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("image must be 2D")
    up = np.pad(arr, 1, mode="edge")
    return up[:-2, 1:-1] + up[2:, 1:-1] + up[1:-1, :-2] + up[1:-1, 2:] - 4.0 * arr


def solve_poisson(rhs) -> np.ndarray:
    """Solve lap(u) = rhs - mean(rhs) under Neumann boundaries, zero-mean u."""
    arr = np.asarray(rhs, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("rhs must be 2D")
    h, w = arr.shape
    rhat = dctn(arr, type=2, norm="ortho")
    lam_y = 2.0 * np.cos(np.pi * np.arange(h) / h) - 2.0
    lam_x = 2.0 * np.cos(np.pi * np.arange(w) / w) - 2.0
    lam = lam_y[:, None] + lam_x[None, :]
    lam[0, 0] = 1.0  # avoid 0/0; the mode is zeroed below
    uhat = rhat / lam
    uhat[0, 0] = 0.0
    u = idctn(uhat, type=2, norm="ortho")
    return u - u.mean()


def reconstruct_from_gradients(gx, gy) -> np.ndarray:
    """Least-squares potential of a gradient pair, zero mean.

    For non-integrable input the curl component is silently dropped; the
    result is the potential whose divergence matches the input's.
    """
    ax, ay = _check_pair(gx, gy)
    return solve_poisson(divergence(ax, ay))
