"""Finite-difference Jacobi-type operators on a uniform profile grid.

Every second-order operator here has the form

    Op[f] = (1/rho) (rho f')' + c f,    rho = r z^(2s),

restricted to the Fourier mode cos(m theta), which adds -m^2/r^2 to c.

=========  ====  ====================================
operator    s    c
=========  ====  ====================================
L           0    |dnu|^2
CalL        0    2 (H (H - c_o) - K)
P          -1    |dnu|^2 - 2 (H + c_o)^2
Pstar      +1    |dnu|^2 - 4 H (H + c_o) - 2 / z^2
=========  ====  ====================================

The flux (rho f')' is differenced on half nodes, so ``diag(M) @ Op`` is
exactly symmetric on interior nodes with the lumped masses M_i = rho_i h.
The apex (m = 0) uses a reflected ghost node, equivalent to the mass
M_0 = rho_{1/2} h / 4. Rows at a grid end that is not the apex are
closed by cubic extrapolation of the four neighbouring interior rows,
so that applying the operator to a smooth function yields second-order
values at the boundary too.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .fields import FieldTable, geometric_fields, normal_derivative, surface_integral
from .profile import ModelParams, ProfileCurve, resample

OPERATORS = {"L": 0, "CalL": 0, "P": -1, "Pstar": 1}
APEX_BCS = ("regular", "vanishing", "none")
OUTER_BCS = ("dirichlet", "free")
_EXTRAPOLATION = (4.0, -6.0, 4.0, -1.0)
_APEX_EVEN = (1.5, -0.6, 0.1)


def _smooth_cutoff(x):
    """C-infinity step: 1 for x <= 0, 0 for x >= 1."""
    x = np.clip(x, 0, 1)
    out = np.zeros_like(x)
    inner = (x > 0) & (x < 1)
    a = np.exp(-1 / (1 - x[inner]))
    b = np.exp(-1 / x[inner])
    out[x <= 0] = 1
    out[inner] = a / (a + b)
    return out


def _axis_calibration(curve, a, rho, h, m, s):
    """Flux and centrifugal factors X, Y for modes m >= 1.

    Near the axis rho ~ sigma, and the flux stencil has a truncation error
    h^2 f'''/(6 sigma) (plus curvature terms of the same type) that is
    singular for the odd fields of a mode m >= 1. Scaling the flux part
    of row i by X_i (a change of the lumped mass) and the m^2/r^2 term by
    Y_i makes the row exact on r^m and r^(m+2), whose exact images are
    known in closed form. The factors are blended to 1 away from the axis,
    where the two test functions can become nearly dependent. Only
    diagonal quantities change, so the symmetric structure is kept.
    """
    r, z, phi, dphi = curve.r, curve.z, curve.phi, curve.dphi
    n = len(r) - 1
    i = np.arange(1, n)
    cos, sin = np.cos(phi[i]), np.sin(phi[i])
    ri = r[i]
    dlog_rho = cos / ri + 2 * s * sin / z[i]
    F, E, C = [], [], []
    for p in (m, m + 2):
        t = r**p
        flux = (a[i] * (t[i + 1] - t[i]) - a[i - 1] * (t[i] - t[i - 1])) / h
        F.append(flux / (rho[i] * h))
        d1 = p * ri ** (p - 1) * cos
        d2 = p * (p - 1) * ri ** (p - 2) * cos**2 - p * ri ** (p - 1) * sin * dphi[i]
        E.append(d2 + dlog_rho * d1)
        C.append(m**2 * t[i] / ri**2)
    # X F_t - Y C_t = E_t - C_t for both test functions
    det = -F[0] * C[1] + F[1] * C[0]
    rhs0, rhs1 = E[0] - C[0], E[1] - C[1]
    X = (-rhs0 * C[1] + rhs1 * C[0]) / det
    Y = (F[0] * rhs1 - F[1] * rhs0) / det
    # blend out before r' drops below 0.7 (and within the first half)
    sig = curve.sigma
    reach = np.nonzero(np.cos(phi) < 0.7)[0]
    s_b = sig[reach[0]] if len(reach) else sig[-1]
    s_b = min(s_b, sig[-1] / 2)
    chi = _smooth_cutoff((sig[i] / s_b - 0.5) * 2)
    X = 1 + chi * (X - 1)
    Y = 1 + chi * (Y - 1)
    return X, Y


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Sparse operator on all grid nodes plus the data of its symmetric form.

    ``full`` acts on values at every node; rows at non-apex ends use the
    extrapolation closure. ``active`` lists the unknowns of the Dirichlet
    (or free) problem. ``stiffness`` is the symmetric flux matrix and
    ``mass`` the lumped weights, so that on interior rows
    ``full = diag(1/mass) @ stiffness + diag(potential)``.
    """

    which: str
    mode: int
    sigma: np.ndarray
    r: np.ndarray
    z: np.ndarray
    full: sp.csr_matrix
    active: np.ndarray
    bc_apex: str
    bc_outer: str
    stiffness: Optional[sp.csr_matrix] = field(default=None, repr=False)
    mass: Optional[np.ndarray] = field(default=None, repr=False)
    potential: Optional[np.ndarray] = field(default=None, repr=False)
    s_power: Optional[int] = None

    @property
    def n(self) -> int:
        return len(self.sigma) - 1

    @property
    def h(self):
        return self.sigma[1] - self.sigma[0]

    @property
    def reduced(self) -> sp.csr_matrix:
        """Operator on the active unknowns with boundary values eliminated."""
        idx = self.active
        if self.stiffness is None:
            return self.full[idx][:, idx]
        inner = idx[idx < self.n] if self.bc_outer == "free" else idx
        S = self.stiffness[inner][:, inner]
        m = self.mass[inner]
        A = sp.diags(1 / m) @ S + sp.diags(self.potential[inner])
        if len(inner) < len(idx):
            # free outer node: append its closure row and coupling column
            col = self.full[inner][:, [self.n]]
            row = self.full[[self.n]][:, idx]
            A = sp.vstack([sp.hstack([A, col]), row])
        return A.tocsr()

    def symmetric_form(self):
        """Diagonal and off-diagonal of the stiffness-plus-potential on active nodes,
        together with the active masses. Requires a Dirichlet problem."""
        if self.stiffness is None:
            raise ValueError(f"operator {self.which} has no symmetric form")
        if self.bc_outer != "dirichlet":
            raise ValueError("the symmetric form needs a Dirichlet outer closure")
        idx = self.active
        S = self.stiffness[idx][:, idx].tocsr()
        m = self.mass[idx]
        diag = S.diagonal() + m * self.potential[idx]
        off = S.diagonal(1)
        return diag, off, m


def _check_grid(curve: ProfileCurve):
    if not curve.is_uniform():
        raise ValueError("operators need a uniform sigma grid; use resample()")
    if np.any(curve.r[1:] <= 0):
        raise ValueError("r must be positive away from the first node")


def _half_node_values(curve: ProfileCurve):
    if curve.r_mid is not None and curve.z_mid is not None:
        return curve.r_mid, curve.z_mid
    mid = (curve.sigma[:-1] + curve.sigma[1:]) / 2
    if curve.dense is not None:
        r, z, _ = curve.dense(mid)
        return np.asarray(r, dtype=curve.r.dtype), np.asarray(z, dtype=curve.r.dtype)
    return (curve.r[:-1] + curve.r[1:]) / 2, (curve.z[:-1] + curve.z[1:]) / 2


def _potential(which, fields: FieldTable, z, c_o):
    H, K = fields.H, fields.K
    dnu = fields.dnu_sq
    if which == "L":
        return dnu
    if which == "CalL":
        return 2 * (H * (H - c_o) - K)
    if which == "P":
        return dnu - 2 * (H + c_o) ** 2
    if which == "Pstar":
        return dnu - 4 * H * (H + c_o) - 2 / z**2
    raise ValueError(f"unknown operator {which!r}")


def _row_combination(n, closures):
    """Identity on n + 1 rows except ``closures``: {row: ((weight, source), ...)}.

    Built in coordinate form; LIL matrices would round extended precision.
    """
    rows, cols, vals = [], [], []
    for i in range(n + 1):
        if i in closures:
            for w, j in closures[i]:
                rows.append(i)
                cols.append(j)
                vals.append(w)
        else:
            rows.append(i)
            cols.append(i)
            vals.append(1.0)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))


def assemble(curve: ProfileCurve, fields: FieldTable, params: ModelParams,
             which: str, mode: int = 0, bc_apex: Optional[str] = None,
             bc_outer: str = "dirichlet") -> DiscreteOperator:
    """Assemble L, CalL, P or Pstar for Fourier mode ``mode``."""
    if which not in OPERATORS:
        raise ValueError(f"which must be one of {sorted(OPERATORS)}")
    if mode < 0 or int(mode) != mode:
        raise ValueError("mode must be a non-negative integer")
    if bc_outer not in OUTER_BCS:
        raise ValueError(f"bc_outer must be one of {OUTER_BCS}")
    _check_grid(curve)
    has_apex = bool(curve.r[0] == 0)
    if bc_apex is None:
        bc_apex = ("regular" if mode == 0 else "vanishing") if has_apex else "none"
    if bc_apex not in APEX_BCS:
        raise ValueError(f"bc_apex must be one of {APEX_BCS}")
    if bc_apex == "regular" and mode > 0:
        raise ValueError("regularity forces f(0) = 0 for modes m >= 1")
    if bc_apex != "none" and not has_apex:
        raise ValueError("apex closure requested on a domain without apex")
    if bc_apex == "none" and has_apex:
        raise ValueError("domains containing the apex need an apex closure")
    s = OPERATORS[which]
    z = curve.z
    if s != 0 and (np.any(z == 0) or np.any(np.sign(z) != np.sign(z[0]))):
        raise ValueError("P and Pstar need z of one sign on the curve")

    n = curve.n
    h = curve.sigma[1] - curve.sigma[0]
    r = curve.r
    r_mid, z_mid = _half_node_values(curve)
    rho = r * z ** (2 * s)
    a = r_mid * z_mid ** (2 * s)

    mass = rho * h
    c = _potential(which, fields, z, params.c_o).copy()
    if mode > 0:
        safe = np.where(r > 0, r, 1)
        c = c - np.where(r > 0, mode**2 / safe**2, 0)
    if bc_apex == "regular":
        mass[0] = a[0] * h / 4
    elif bc_apex == "vanishing":
        mass[0] = 0
        c[0] = 0
        X, Y = _axis_calibration(curve, a, rho, h, mode, s)
        mass[1:n] /= X
        c[1:n] += mode**2 / r[1:n] ** 2 * (1 - Y)

    # symmetric flux matrix, tridiagonal
    main = np.zeros(n + 1, dtype=a.dtype)
    main[:-1] -= a / h
    main[1:] -= a / h
    stiffness = sp.diags([main, a / h, a / h], [0, 1, -1], format="csr",
                         dtype=a.dtype)

    inv_mass = np.zeros_like(mass)
    nz = mass != 0
    inv_mass[nz] = 1 / mass[nz]
    A = (sp.diags(inv_mass) @ stiffness + sp.diags(c * nz)).tocsr()
    closures = {n: tuple(zip(_EXTRAPOLATION, (n - 1, n - 2, n - 3, n - 4)))}
    if bc_apex == "vanishing":
        closures[0] = ()
    elif bc_apex == "regular":
        # even extrapolation in sigma keeps the apex value consistent with
        # the interior truncation error (the ghost row is kept for solves)
        closures[0] = tuple(zip(_APEX_EVEN, (1, 2, 3)))
    else:
        closures[0] = tuple(zip(_EXTRAPOLATION, (1, 2, 3, 4)))
    full = (_row_combination(n, closures).astype(A.dtype) @ A).tocsr()
    full.eliminate_zeros()

    first = 0 if bc_apex == "regular" else 1
    last = n - 1 if bc_outer == "dirichlet" else n
    active = np.arange(first, last + 1)
    return DiscreteOperator(which=which, mode=int(mode), sigma=curve.sigma, r=r, z=z,
                            full=full, active=active, bc_apex=bc_apex,
                            bc_outer=bc_outer, stiffness=stiffness, mass=mass,
                            potential=c, s_power=s)


def apply(op: DiscreteOperator, f) -> np.ndarray:
    """Apply the operator to nodal values, including boundary rows."""
    f = np.asarray(f)
    if f.shape != op.sigma.shape:
        raise ValueError(f"expected {op.sigma.shape[0]} nodal values, got {f.shape}")
    return op.full @ f


def assemble_F(curve: ProfileCurve, fields: FieldTable, params: ModelParams,
               mode: int = 0, bc_outer: str = "dirichlet") -> DiscreteOperator:
    """The fourth-order operator F = (Pstar + 2/z^2) P / 2 as a matrix product."""
    if curve.n - 1 < 32:
        raise ValueError("F needs at least 32 interior nodes")
    P = assemble(curve, fields, params, "P", mode, bc_outer=bc_outer)
    Ps = assemble(curve, fields, params, "Pstar", mode, bc_outer=bc_outer)
    outer = Ps.full + sp.diags(2 / curve.z**2)
    full = (0.5 * (outer @ P.full)).tocsr()
    return DiscreteOperator(which="F", mode=P.mode, sigma=P.sigma, r=P.r, z=P.z,
                            full=full, active=P.active, bc_apex=P.bc_apex,
                            bc_outer=bc_outer)


def to_coordinate_text(op: DiscreteOperator) -> str:
    """Coordinate-list rendering: one ``row col value`` line per entry."""
    coo = op.full.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{coo.row[i]} {coo.col[i]} {float(coo.data[i]):.17g}" for i in order]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# identities

def default_probes(curve: ProfileCurve) -> Dict[str, np.ndarray]:
    """Smooth probes, even in sigma so they are regular at the apex."""
    s = curve.sigma / curve.sigma[-1]
    return {
        "f": np.cos(np.pi * s / 2) * (1 + s**2 / 2),
        "g": 1 + s**2 - s**4 / 3,
    }


def identity_suite(curve: ProfileCurve, fields: FieldTable, params: ModelParams,
                   probes: Optional[Dict[str, np.ndarray]] = None) -> Dict[str, float]:
    """Max-norm residuals of the operator identities on one grid.

    Keys: ``easyP``, ``easyPstar``, ``PPstar``, ``int`` (the Green identity
    between P and Pstar), ``P_nu3``, ``P_q``, ``F_nu3`` and, for curves
    with an apex, the mode-1 checks ``P1_nu_r`` and ``F1_nu_r``.
    """
    probes = probes or default_probes(curve)
    f, g = probes["f"], probes["g"]
    z, c_o = curve.z, params.c_o
    P = assemble(curve, fields, params, "P", 0)
    Ps = assemble(curve, fields, params, "Pstar", 0)
    CL = assemble(curve, fields, params, "CalL", 0)
    F = assemble_F(curve, fields, params, 0)
    nu3, q = fields.nu3, fields.q

    def mx(v):
        return float(np.max(np.abs(v)))

    out = {
        "easyP": mx(apply(P, f) + 2 * f / z**2 - z * apply(CL, f / z)),
        "easyPstar": mx(apply(Ps, f) + 2 * f / z**2 - apply(CL, z * f) / z),
        "PPstar": mx(apply(Ps, f / z**2) - apply(P, f) / z**2),
    }
    bulk = surface_integral(curve, g * apply(P, f) - f * apply(Ps, g))
    dn_f = normal_derivative(curve, f)
    dn_g = normal_derivative(curve, g)
    dn_z = np.sin(curve.phi[-1])
    fo, go, zo = f[-1], g[-1], z[-1]
    ring = 2 * np.pi * curve.r[-1] * (go * dn_f - fo * dn_g - 2 * fo * go * dn_z / zo)
    out["int"] = float(abs(bulk - ring))
    out["P_nu3"] = mx(apply(P, nu3) + 2 * nu3 / z**2)
    out["P_q"] = mx(apply(P, q) - 2 * c_o)
    out["F_nu3"] = mx(apply(F, nu3))
    if curve.r[0] == 0:
        P1 = assemble(curve, fields, params, "P", 1)
        F1 = assemble_F(curve, fields, params, 1)
        out["P1_nu_r"] = mx(apply(P1, fields.nu_r))
        out["F1_nu_r"] = mx(apply(F1, fields.nu_r))
    return out


@dataclass
class IdentityStudy:
    grids: list
    residuals: Dict[str, list]
    slopes: Dict[str, float]


def convergence_slope(ns: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares order p in value ~ n^-p."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(-np.polyfit(x, y, 1)[0])


def identity_study(curve: ProfileCurve, ns: Sequence[int] = (256, 512, 1024),
                   probe_factory: Optional[Callable] = None) -> IdentityStudy:
    """Run :func:`identity_suite` on several resamplings and fit orders."""
    residuals: Dict[str, list] = {}
    for n in ns:
        c = resample(curve, n)
        fl = geometric_fields(c)
        probes = probe_factory(c) if probe_factory else None
        for key, val in identity_suite(c, fl, curve.params, probes).items():
            residuals.setdefault(key, []).append(val)
    slopes = {k: convergence_slope(ns, v) for k, v in residuals.items()}
    return IdentityStudy(grids=list(ns), residuals=residuals, slopes=slopes)
