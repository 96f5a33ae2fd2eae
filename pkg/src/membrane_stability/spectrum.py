"""Dirichlet spectra of the operator P for the two weights.

``InvZSq`` solves P[f] + lambda f / z^2 = 0, ``ZSq`` solves
P[f] + lambda z^2 f = 0. With the symmetric form of P (stiffness S,
masses M, potential c), both are symmetric-definite pencils

    -(S + diag(M c)) f = lambda diag(M w) f,

which are reduced to a symmetric tridiagonal matrix. Eigenvalues come
from Sturm-count multisection and eigenvectors from inverse iteration,
all in the precision of the operator (extended on resampled curves).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._tridiag import bisect_eigenvalues, inverse_iteration, sturm_count, tridiagonal_matvec
from .errors import ConvergenceFailure, DegenerateWeight
from .operators import DiscreteOperator, apply

RESIDUAL_TOL = 1e-8


class WeightKind(str, enum.Enum):
    INV_Z_SQ = "invzsq"
    Z_SQ = "zsq"


@dataclass(frozen=True, eq=False)
class EigenPair:
    """``f`` holds values on every grid node (zero where the problem is
    constrained) with unit weighted norm and positive first active value."""

    lam: float
    f: np.ndarray
    residual: float
    sign_changes: int
    index: int


def _weight(op: DiscreteOperator, kind: WeightKind):
    kind = WeightKind(kind)
    z = op.z[op.active]
    with np.errstate(divide="ignore"):
        w = z**-2 if kind is WeightKind.INV_Z_SQ else z**2
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DegenerateWeight("eigen weight must be finite and positive")
    return w


def _pencil(op: DiscreteOperator, kind: WeightKind):
    if op.which != "P":
        raise ValueError("the Dirichlet spectrum is defined for the operator P")
    diag, off, mass = op.symmetric_form()
    if np.any(mass <= 0):
        raise DegenerateWeight("lumped masses must be positive")
    B = mass * _weight(op, kind)
    scale = 1 / np.sqrt(B)
    d = -diag * scale**2
    e = -off * scale[:-1] * scale[1:]
    return d, e, scale, B


def angular_factor(mode: int) -> float:
    return 2 * np.pi if mode == 0 else np.pi


def _sign_changes(f, rel=1e-10):
    g = f[np.abs(f) > rel * np.max(np.abs(f))]
    return int(np.sum(np.sign(g[1:]) != np.sign(g[:-1])))


def eigen_residual(op: DiscreteOperator, kind: WeightKind, lam, f_active):
    Pf = op.reduced @ f_active
    w = _weight(op, kind)
    return float(np.max(np.abs(Pf + lam * w * f_active)) / np.max(np.abs(f_active)))


def solve_dirichlet_spectrum(opP: DiscreteOperator, weight: WeightKind, k: int = 3):
    """First k eigenpairs of the Dirichlet problem, ascending."""
    weight = WeightKind(weight)
    if k < 1:
        raise ValueError("k must be positive")
    d, e, scale, B = _pencil(opP, weight)
    k = min(k, len(d))
    lams = bisect_eigenvalues(d, e, np.arange(k))
    vecs = inverse_iteration(d, e, lams)
    pairs = []
    for j in range(k):
        f_act = vecs[j] * scale
        norm = np.sqrt(angular_factor(opP.mode) * np.sum(B * f_act**2))
        f_act = f_act / norm
        if f_act[0] < 0 or (f_act[0] == 0 and f_act[np.nonzero(f_act)[0][0]] < 0):
            f_act = -f_act
        res = eigen_residual(opP, weight, lams[j], f_act)
        if res > RESIDUAL_TOL:
            vecs_more = inverse_iteration(d, e, lams[j:j + 1], iterations=6, seed=j + 1)
            f_try = vecs_more[0] * scale
            f_try /= np.sqrt(angular_factor(opP.mode) * np.sum(B * f_try**2))
            f_try = f_try if f_try[0] >= 0 else -f_try
            res = eigen_residual(opP, weight, lams[j], f_try)
            f_act = f_try
            if res > RESIDUAL_TOL:
                raise ConvergenceFailure(
                    f"eigenpair {j} residual {res:.3e} above {RESIDUAL_TOL:g}",
                    {"index": j, "lambda": float(lams[j]), "residual": res})
        f = np.zeros_like(opP.sigma)
        f[opP.active] = f_act
        pairs.append(EigenPair(lam=float(lams[j]), f=f, residual=res,
                               sign_changes=_sign_changes(f_act), index=j))
    return pairs


def count_below(opP: DiscreteOperator, weight: WeightKind, x: float) -> int:
    """Number of Dirichlet eigenvalues strictly below x."""
    d, e, _, _ = _pencil(opP, WeightKind(weight))
    return int(sturm_count(d, e, np.array(x, dtype=d.dtype)))


def eigenvalues_around(opP: DiscreteOperator, weight: WeightKind, x: float = 0.0):
    """The eigenvalues just below and just above x (None where absent)."""
    d, e, _, _ = _pencil(opP, WeightKind(weight))
    j = int(sturm_count(d, e, np.array(x, dtype=d.dtype)))
    idx = [i for i in (j - 1, j) if 0 <= i < len(d)]
    vals = dict(zip(idx, bisect_eigenvalues(d, e, idx))) if idx else {}
    below = float(vals[j - 1]) if j - 1 in vals else None
    above = float(vals[j]) if j in vals else None
    return below, above


def rayleigh_quotient(opP: DiscreteOperator, f, weight: WeightKind) -> float:
    """Discrete Rayleigh quotient -<f, P f>_{z^-2} / <f, w f>_{z^-2}."""
    f = np.asarray(f)
    if f.shape != opP.sigma.shape:
        raise ValueError("f must hold one value per grid node")
    scale = np.max(np.abs(f))
    inactive = np.setdiff1d(np.arange(len(f)), opP.active)
    if scale > 0 and np.any(np.abs(f[inactive]) > 1e-8 * scale):
        raise ValueError("f must vanish on the constrained nodes")
    diag, off, mass = opP.symmetric_form()
    fa = f[opP.active]
    num = -np.dot(fa, tridiagonal_matvec(diag, off, fa))
    den = np.sum(mass * _weight(opP, weight) * fa**2)
    if den == 0:
        raise ValueError("zero function has no Rayleigh quotient")
    return float(num / den)


def fp_consistency(opF: DiscreteOperator, pair: EigenPair, z) -> float:
    """Max-norm residual of F[f] - lambda (lambda - 2) f / (2 z^4)."""
    lam = pair.lam
    return float(np.max(np.abs(apply(opF, pair.f) - 0.5 * lam * (lam - 2) * pair.f / z**4)))
