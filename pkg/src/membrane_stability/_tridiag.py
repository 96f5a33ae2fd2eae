"""Symmetric tridiagonal kernels that work in any numpy float precision."""

from __future__ import annotations

import numpy as np

N_SHIFTS = 31


def gershgorin(d, e):
    rad = np.zeros_like(d)
    rad[:-1] += np.abs(e)
    rad[1:] += np.abs(e)
    return np.min(d - rad), np.max(d + rad)


def sturm_count(d, e, x):
    """Number of eigenvalues strictly below each shift in x (any shape)."""
    x = np.asarray(x, dtype=d.dtype)
    e2 = e * e
    tiny = np.finfo(d.dtype).tiny ** 0.5
    q = d[0] - x
    q = np.where(q == 0, -tiny, q)
    count = (q < 0).astype(np.int64)
    for i in range(1, len(d)):
        q = d[i] - x - e2[i - 1] / q
        q = np.where(q == 0, -tiny, q)
        count += q < 0
    return count


def bisect_eigenvalues(d, e, indices, rtol=None):
    """Eigenvalues with the given 0-based indices by multisection on Sturm counts."""
    indices = np.asarray(indices, dtype=np.int64)
    eps = np.finfo(d.dtype).eps
    lo0, hi0 = gershgorin(d, e)
    span = max(abs(lo0), abs(hi0))
    atol = 8 * eps * span
    rtol = 8 * eps if rtol is None else rtol
    lo = np.full(indices.shape, lo0 - atol, dtype=d.dtype)
    hi = np.full(indices.shape, hi0 + atol, dtype=d.dtype)
    frac = np.arange(1, N_SHIFTS + 1, dtype=d.dtype) / (N_SHIFTS + 1)
    for _ in range(200):
        width = hi - lo
        todo = width > np.maximum(atol, rtol * np.maximum(abs(lo), abs(hi)))
        if not todo.any():
            break
        shifts = lo[todo, None] + width[todo, None] * frac[None, :]
        counts = sturm_count(d, e, shifts)
        below = np.sum(counts <= indices[todo, None], axis=1)
        new_lo = np.where(below > 0, shifts[np.arange(len(below)), np.maximum(below - 1, 0)],
                          lo[todo])
        new_hi = np.where(below < N_SHIFTS,
                          shifts[np.arange(len(below)), np.minimum(below, N_SHIFTS - 1)],
                          hi[todo])
        lo[todo], hi[todo] = new_lo, new_hi
    return (lo + hi) / 2


def _solve_shifted(d, e, shifts, rhs):
    """Solve (T - shift_j I) x_j = rhs_j for every j (rows of rhs)."""
    n = len(d)
    k = len(shifts)
    tiny = np.finfo(d.dtype).eps * max(np.max(np.abs(d)), 1)
    cp = np.zeros((k, n), dtype=d.dtype)
    bp = np.zeros((k, n), dtype=d.dtype)
    den = d[0] - shifts
    den = np.where(np.abs(den) < tiny, tiny, den)
    cp[:, 0] = (e[0] / den) if n > 1 else 0
    bp[:, 0] = rhs[:, 0] / den
    for i in range(1, n):
        den = d[i] - shifts - e[i - 1] * cp[:, i - 1]
        den = np.where(np.abs(den) < tiny, tiny, den)
        if i < n - 1:
            cp[:, i] = e[i] / den
        bp[:, i] = (rhs[:, i] - e[i - 1] * bp[:, i - 1]) / den
    x = np.zeros_like(bp)
    x[:, -1] = bp[:, -1]
    for i in range(n - 2, -1, -1):
        x[:, i] = bp[:, i] - cp[:, i] * x[:, i + 1]
    return x


def inverse_iteration(d, e, lams, iterations=3, seed=0):
    """Orthonormal eigenvectors (rows) for the eigenvalues ``lams``."""
    rng = np.random.default_rng(seed)
    n = len(d)
    lams = np.asarray(lams, dtype=d.dtype)
    eps = np.finfo(d.dtype).eps
    span = max(np.max(np.abs(d)), 1)
    shifts = lams + 4 * eps * span
    x = rng.standard_normal((len(lams), n)).astype(d.dtype)
    for _ in range(iterations):
        x = _solve_shifted(d, e, shifts, x)
        x = _gram_schmidt(x)
    return x


def _gram_schmidt(x):
    out = np.array(x)
    for j in range(len(out)):
        for i in range(j):
            out[j] -= np.dot(out[i], out[j]) * out[i]
        out[j] /= np.sqrt(np.dot(out[j], out[j]))
    return out


def tridiagonal_matvec(d, e, x):
    y = d * x
    y[:-1] += e * x[1:]
    y[1:] += e * x[:-1]
    return y


def solve_tridiagonal(d, e, rhs):
    """Solve the symmetric tridiagonal system T x = rhs."""
    rhs = np.asarray(rhs, dtype=d.dtype)
    zero = np.zeros(1, dtype=d.dtype)
    return _solve_shifted(d, e, zero, rhs[None, :])[0]
