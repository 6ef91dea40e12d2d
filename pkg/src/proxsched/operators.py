"""Discrete imaging and graph operators used by the prox oracles and benchmarks."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage


def image_gradient(x: NDArray) -> NDArray:
    """Forward-difference gradient of an N x N image, shape (2, N, N).

    Last row/column differences are zero (replicated boundary), the standard
    convention for isotropic TV whose gradient/divergence pair has operator
    norm squared <= 8.
    """
    g = np.zeros((2,) + x.shape, dtype=float)
    g[0, :-1, :] = x[1:, :] - x[:-1, :]
    g[1, :, :-1] = x[:, 1:] - x[:, :-1]
    return g


def image_divergence(p: NDArray) -> NDArray:
    """Negative adjoint of image_gradient: <grad x, p> = -<x, div p>."""
    d = np.zeros(p.shape[1:], dtype=float)
    d[0, :] += p[0, 0, :]
    d[1:-1, :] += p[0, 1:-1, :] - p[0, :-2, :]
    d[-1, :] += -p[0, -2, :]
    d[:, 0] += p[1, :, 0]
    d[:, 1:-1] += p[1, :, 1:-1] - p[1, :, :-2]
    d[:, -1] += -p[1, :, -2]
    return d


def tv_value(x: NDArray) -> float:
    """Isotropic total variation: sum of per-pixel gradient magnitudes."""
    g = image_gradient(x)
    return float(np.sum(np.sqrt(g[0] ** 2 + g[1] ** 2)))


def gaussian_kernel(size: int, std: float) -> NDArray:
    """Normalized size x size Gaussian kernel (sums to 1)."""
    half = (size - 1) / 2.0
    ax = np.arange(size, dtype=float) - half
    if std <= 0:
        raise ValueError("kernel std must be positive")
    g1 = np.exp(-0.5 * (ax / std) ** 2)
    k = np.outer(g1, g1)
    return k / k.sum()


def blur(x: NDArray, kernel: NDArray) -> NDArray:
    """Correlate with a symmetric kernel under reflective padding.

    With an even-symmetric kernel this operator is self-adjoint, which the
    power-iteration Lipschitz estimate and the TV dual oracle rely on.
    """
    return ndimage.correlate(x, kernel, mode="reflect")


def operator_norm_squared(apply_op, apply_adjoint, dim: int, iters: int = 100,
                          seed: int = 0) -> float:
    """Largest eigenvalue of (A^T A) estimated by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = apply_adjoint(apply_op(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam = float(v @ w)
        v = w / nw
    return lam


def incidence_matrix(n_vertices: int, edges: list[tuple[int, int]]) -> NDArray:
    """Signed edge-incidence matrix B: (Bx)_e = x_u - x_v for edge (u, v), u < v."""
    B = np.zeros((len(edges), n_vertices))
    for e, (u, v) in enumerate(edges):
        if u == v:
            raise ValueError("self-loops are not allowed")
        a, b = (u, v) if u < v else (v, u)
        B[e, a] = 1.0
        B[e, b] = -1.0
    return B
