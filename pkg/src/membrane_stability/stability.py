"""Stability decisions for critical surfaces of G and of the Euler-Helfrich energy.

The constrained test for G works with the ZSq Dirichlet problem
P[f] + lambda z^2 f = 0 and the solution h of P[h] = -2, h = 0 on the
boundary. The axisymmetric decision table uses the first two mode-0
eigenvalues; non-axisymmetric modes are checked separately because a
variation f(sigma) cos(m theta) with m >= 1 satisfies the volume-type
constraint int f z^-2 dSigma = 0 automatically, so a single negative
eigenvalue in such a mode already proves instability. Mode 1 is the
only one that needs checking: the -m^2/r^2 term makes every eigenvalue
increase with m.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from ._tridiag import solve_tridiagonal
from .errors import SingularBlowup, SingularOperator
from .fields import (BoundaryData, FieldTable, boundary_darboux, normal_derivative,
                     surface_integral)
from .operators import DiscreteOperator, apply, assemble
from .profile import ApexInit, ModelParams, ProfileCurve, StopKind, apex_expansion, profile_rhs
from .spectrum import WeightKind, angular_factor, eigenvalues_around, solve_dirichlet_spectrum

ZERO_RTOL = 1e-3
H_RESIDUAL_TOL = 1e-8
PSI_BLOWUP = 1e12


class Verdict(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    STABLE_UNCONSTRAINED = "StableUnconstrained"
    UNSTABLE_TWO_NEGATIVE = "UnstableTwoNegative"
    INAPPLICABLE = "Inapplicable"


@dataclass
class PsiSolution:
    """Apex-regular solution of P[psi] = 0 with psi(0) = 1."""

    sigma: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray

    @property
    def boundary(self) -> float:
        return float(self.psi[-1])

    @property
    def dn_boundary(self) -> float:
        """Outward normal derivative at the boundary after scaling psi(l) = 1."""
        return float(self.dpsi[-1] / self.psi[-1])


@dataclass
class StabilityReport:
    lambda1: float
    lambda2: float
    h_integral: Optional[float]
    verdict: Verdict
    reason: str
    psi_boundary: Optional[float] = None
    dn_psi_boundary: Optional[float] = None
    mode1_lambda1: Optional[float] = None
    mode1_lambda2: Optional[float] = None
    quadratic_form_samples: list = field(default_factory=list)
    el_residuals: dict = field(default_factory=dict)
    bound_chain: Optional[dict] = None
    n: int = 0

    @property
    def is_stable(self) -> bool:
        return self.verdict in (Verdict.STABLE, Verdict.STABLE_UNCONSTRAINED)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict.value
        return out


# --------------------------------------------------------------------------
# building blocks


def _require_mode0(op: DiscreteOperator):
    if op.which != "P" or op.mode != 0:
        raise ValueError("expected the mode-0 operator P")


def _sign(lam: float, scale: float, rtol: float = ZERO_RTOL) -> int:
    """Sign of an eigenvalue, with |lam| <= rtol * |scale| counted as zero."""
    if abs(lam) <= rtol * abs(scale):
        return 0
    return 1 if lam > 0 else -1


def constraint_integral(curve: ProfileCurve, f) -> float:
    """The constraint functional int f z^-2 dSigma."""
    return float(surface_integral(curve, np.asarray(f) / curve.z**2))


def solve_h(opP: DiscreteOperator, curve: ProfileCurve,
            zero_rtol: float = ZERO_RTOL) -> np.ndarray:
    """Solve P[h] = -2 with h = 0 on the outer boundary (apex regular)."""
    _require_mode0(opP)
    if opP.bc_outer != "dirichlet":
        raise ValueError("solve_h needs the Dirichlet outer closure")
    below, above = eigenvalues_around(opP, WeightKind.Z_SQ, 0.0)
    near = [v for v in (below, above) if v is not None]
    near.sort(key=abs)
    if len(near) == 2 and abs(near[0]) <= zero_rtol * abs(near[1]):
        raise SingularOperator(f"ZSq eigenvalue {near[0]:.3e} is zero within "
                               f"tolerance; P[h] = -2 has no reliable solution")
    diag, off, mass = opP.symmetric_form()
    h_act = solve_tridiagonal(diag, off, -2 * mass)
    res = opP.reduced @ h_act + 2
    scale = max(1.0, float(np.max(np.abs(h_act))))
    if float(np.max(np.abs(res))) > H_RESIDUAL_TOL * scale:
        raise SingularOperator(f"P[h] + 2 residual {float(np.max(np.abs(res))):.3e} too large")
    h = np.zeros_like(curve.sigma)
    h[opP.active] = h_act
    return h


def shoot_psi(curve: ProfileCurve, fields: FieldTable, params: ModelParams,
              tol: float = 1e-11) -> PsiSolution:
    """Integrate P[psi] = 0 from the apex alongside the profile ODE.

    Near the apex psi = 1 - c(0) sigma^2 / 4 with c(0) = 2k^2 - 2(k + c_o)^2,
    k the apex curvature, which fixes the regular solution.
    """
    if curve.z_hat is None or curve.r[0] != 0:
        raise ValueError("shoot_psi needs an apex-started curve")
    c_o = params.c_o
    init = ApexInit(curve.z_hat)
    delta = init.offset(c_o)
    k = -(1 / curve.z_hat + c_o)
    c0 = 2 * k**2 - 2 * (k + c_o) ** 2
    r0, z0, phi0 = (float(v) for v in apex_expansion(params, init, delta))
    y0 = [r0, z0, phi0, 1 - c0 * delta**2 / 4, -c0 * delta / 2]

    def rhs(s, y):
        r, z, phi, psi, dpsi = y
        dr, dz, dphi = profile_rhs(s, y[:3], c_o)
        kp = np.sin(phi) / r
        H = (dphi + kp) / 2
        pot = dphi**2 + kp**2 - 2 * (H + c_o) ** 2
        return [dr, dz, dphi, dpsi, -(np.cos(phi) / r - 2 * np.sin(phi) / z) * dpsi - pot * psi]

    def blow(s, y):
        return PSI_BLOWUP - abs(y[3])

    blow.terminal = True
    sig = np.asarray(curve.sigma, dtype=float)
    end = float(sig[-1])
    sol = solve_ivp(rhs, (delta, end), y0, method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=True, events=[blow])
    if sol.status != 0:
        raise SingularBlowup(f"psi integration stopped near sigma={sol.t[-1]:.6g}")
    psi = np.empty_like(sig)
    dpsi = np.empty_like(sig)
    near = sig < delta
    psi[near] = 1 - c0 * sig[near] ** 2 / 4
    dpsi[near] = -c0 * sig[near] / 2
    vals = sol.sol(sig[~near])
    psi[~near], dpsi[~near] = vals[3], vals[4]
    return PsiSolution(sigma=sig, psi=psi, dpsi=dpsi)


def h_closed_form(fields: FieldTable, params: ModelParams, psi: PsiSolution) -> np.ndarray:
    """c_o^-1 (q(l) psi - psi(l) q) / psi(l), valid when P[q] = 2 c_o."""
    q = np.asarray(fields.q, dtype=float)
    psi_n = psi.psi / psi.boundary
    return (q[-1] * psi_n - q) / params.c_o


# --------------------------------------------------------------------------
# second variations


def _boundary_factor(curve: ProfileCurve, mode: int) -> float:
    return float(angular_factor(mode) * curve.r[-1])


def _check_vanishing(f, what):
    f = np.asarray(f)
    scale = float(np.max(np.abs(f))) or 1.0
    if abs(float(f[-1])) > 1e-8 * scale:
        warnings.warn(f"{what}: test function does not vanish on the boundary",
                      RuntimeWarning, stacklevel=3)


def second_variation_G(opP: DiscreteOperator, curve: ProfileCurve, f) -> float:
    """-int f P[f] z^-2 dSigma."""
    f = np.asarray(f)
    return float(-surface_integral(curve, f * apply(opP, f) / curve.z**2, opP.mode))


def _area_term(opP, curve, f):
    Pf = apply(opP, f)
    return 0.5 * surface_integral(curve, Pf * (Pf + 2 * f / curve.z**2), opP.mode)


def second_variation_H(opP: DiscreteOperator, curve: ProfileCurve, f) -> float:
    f = np.asarray(f)
    _check_vanishing(f, "second_variation_H")
    dn_f = normal_derivative(curve, f)
    dn_z = normal_derivative(curve, curve.z)
    ring = _boundary_factor(curve, opP.mode) * dn_f**2 * dn_z / curve.z[-1]
    return float(_area_term(opP, curve, f) + ring)


def second_variation_E(opP: DiscreteOperator, curve: ProfileCurve, f,
                       params: ModelParams) -> float:
    f = np.asarray(f)
    _check_vanishing(f, "second_variation_E")
    dn_f = normal_derivative(curve, f)
    dn_z = normal_derivative(curve, curve.z)
    kappa_g = -np.cos(curve.phi[-1]) / curve.r[-1]
    weight = params.a * dn_z / curve.z[-1] - params.b * kappa_g
    ring = _boundary_factor(curve, opP.mode) * weight * dn_f**2
    return float(params.a * _area_term(opP, curve, f) + ring)


def nu3_boundary_form(bd: BoundaryData, params: ModelParams) -> float:
    """a * (boundary integral of (d_n z / z)(d_n nu_3)^2) for a parallel circle."""
    return float(params.a * 2 * np.pi * bd.r_o * bd.dn_z / bd.z_o * bd.dn_nu3**2)


# --------------------------------------------------------------------------
# Euler-Helfrich boundary conditions and corollaries


def _el_values(bd: BoundaryData, K_o: float, params: ModelParams, alpha, beta):
    a, b, c_o = params.a, params.b, params.c_o
    J = alpha / bd.r_o**2 - beta
    return {
        "EL2": float(a * (bd.H + c_o) + b * bd.kappa_n),
        "EL3": float(J * bd.kappa_n - a * bd.dn_H),
        "EL4": float(J * bd.kappa_g + a * (bd.H + c_o) ** 2 + b * K_o),
    }


def el_residuals_and_alpha_beta(curve: ProfileCurve, fields: FieldTable,
                                params: ModelParams, samples: int = 3) -> dict:
    """Boundary Euler-Lagrange residuals and the admissible (alpha, beta) line.

    The line is beta = alpha / r_o^2 - C with C = a (1 - 2 c_o r_o) / z_o;
    sampled pairs have alpha chosen so that beta > 0.
    """
    bd = boundary_darboux(curve, fields)
    K_o = float(fields.K[-1])
    C = params.a * (1 - 2 * params.c_o * bd.r_o) / bd.z_o
    out = _el_values(bd, K_o, params, params.alpha, params.beta)
    pairs = []
    for j in range(1, samples + 1):
        alpha = bd.r_o**2 * (max(C, 0.0) + j)
        beta = alpha / bd.r_o**2 - C
        pairs.append({"alpha": float(alpha), "beta": float(beta),
                      **_el_values(bd, K_o, params, alpha, beta)})
    out.update({"C": float(C), "r_o": bd.r_o, "z_o": bd.z_o, "pairs": pairs})
    return out


def corollary_checks(curve: ProfileCurve, fields: FieldTable, params: ModelParams,
                     nu3_tol: float = 1e-8, el_tol: float = 1e-4) -> dict:
    """Preconditions and verdicts of the two Euler-Helfrich instability results.

    The first result needs nu_3 = 0 on a boundary plane the surface stays on
    one side of; E-criticality then holds for every (alpha, beta) on the
    admissible line, so the given pair is not checked. The second result is
    stated for the given (alpha, beta), so the boundary Euler-Lagrange
    residuals must vanish within ``el_tol``.
    """
    bd = boundary_darboux(curve, fields)
    z = np.asarray(curve.z, dtype=float)
    z_o = bd.z_o
    failed = []
    if not params.c_o > 0:
        failed.append("c_o > 0")
    if params.b != 0:
        failed.append("b = 0")
    if curve.r[0] != 0:
        failed.append("disc type (apex on the domain)")
    if z_o == 0 or np.any(np.sign(z) != np.sign(z_o)) or np.any(np.abs(z) < abs(z_o) * (1 - 1e-12)):
        failed.append("surface on one side of its boundary plane, away from z = 0")
    if abs(bd.nu3) > nu3_tol:
        failed.append("nu_3 = 0 on the boundary")
    out = {"dn_z": bd.dn_z, "dn_nu3": bd.dn_nu3, "z_o": z_o, "nu3_boundary": bd.nu3}
    if failed:
        out.update(cor_applicable=False, cor_verdict=Verdict.INAPPLICABLE.value,
                   cor_failed=failed, cor_value=None)
    else:
        value = nu3_boundary_form(bd, params)
        verdict = Verdict.UNSTABLE if value < 0 and bd.dn_nu3 != 0 else Verdict.INAPPLICABLE
        out.update(cor_applicable=True, cor_verdict=verdict.value, cor_failed=[],
                   cor_value=value)

    K_o = float(fields.K[-1])
    sign = (params.alpha / bd.r_o**2 - params.beta) * K_o
    out.update(cor2_sign=float(sign), K_boundary=K_o)
    failed2 = [p for p in failed if p in ("b = 0", "disc type (apex on the domain)")]
    if np.any(np.sign(z) != np.sign(z[0])) or np.any(z == 0):
        failed2.append("surface in one open half-space")
    el = _el_values(bd, K_o, params, params.alpha, params.beta)
    if max(abs(v) for v in el.values()) > el_tol:
        failed2.append("critical for E (boundary Euler-Lagrange residuals)")
    if failed2:
        out.update(cor2_verdict=Verdict.INAPPLICABLE.value, cor2_failed=failed2)
    else:
        out.update(cor2_verdict=(Verdict.UNSTABLE.value if sign < 0 else "Inconclusive"),
                   cor2_failed=[])
    return out


def bound_chain(curve: ProfileCurve, fields: FieldTable, params: ModelParams,
                psi: PsiSolution) -> dict:
    """Both sides of the two inequalities that bound int h z^-2 on a horizontal-edged disc."""
    c_o = params.c_o
    r_l, z_l = float(curve.r[-1]), float(curve.z[-1])
    psi_n = psi.psi / psi.boundary
    lhs_psi = float(surface_integral(curve, psi_n / curve.z**2))
    dn_q = float(normal_derivative(curve, fields.q))
    dn_q_formula = 2 * r_l / z_l - 2 * c_o * r_l
    rhs_psi = np.pi * r_l * dn_q / (c_o * z_l**2)
    lhs_q = float(surface_integral(curve, fields.q / curve.z**2))
    rhs_q = np.pi * r_l**2 / z_l
    h_bound = -2 * np.pi * r_l**2 / (c_o**2 * z_l**2) + np.pi * r_l**2 / (c_o * z_l)
    return {
        "psi_integral": lhs_psi, "psi_bound": float(rhs_psi), "psi_holds": bool(lhs_psi < rhs_psi),
        "q_integral": lhs_q, "q_bound": float(rhs_q), "q_holds": bool(lhs_q > rhs_q),
        "dn_q": dn_q, "dn_q_formula": float(dn_q_formula),
        "dn_q_rel_err": float(abs(dn_q - dn_q_formula) / abs(dn_q_formula)),
        "h_integral_bound": float(h_bound),
    }


# --------------------------------------------------------------------------
# decision procedure


def thmbif_verdict(curve: ProfileCurve, fields: FieldTable, params: ModelParams,
                   check_modes: bool = True, zero_rtol: float = ZERO_RTOL) -> StabilityReport:
    """Constrained stability verdict for G on a uniform, apex-started grid.

    Decision table on the mode-0 ZSq eigenvalues: lambda1 >= 0 gives
    StableUnconstrained, lambda2 < 0 gives UnstableTwoNegative, and in the
    gated case lambda1 < 0 <= lambda2 the sign of int h z^-2 decides.
    A singular P leaves the gated case Inapplicable. With ``check_modes``
    a negative mode-1 eigenvalue overrides with Unstable.
    """
    z = np.asarray(curve.z, dtype=float)
    if np.any(z == 0) or np.any(np.sign(z) != np.sign(z[0])):
        raise ValueError("z must keep one sign on the curve")
    P0 = assemble(curve, fields, params, "P", 0)
    lam1, lam2 = (p.lam for p in solve_dirichlet_spectrum(P0, WeightKind.Z_SQ, 2))
    f1 = solve_dirichlet_spectrum(P0, WeightKind.Z_SQ, 1)[0].f

    m1 = (None, None)
    if check_modes and curve.r[0] == 0:
        P1 = assemble(curve, fields, params, "P", 1)
        m1 = tuple(p.lam for p in solve_dirichlet_spectrum(P1, WeightKind.Z_SQ, 2))

    h = None
    h_int = None
    try:
        h = solve_h(P0, curve, zero_rtol)
        h_int = constraint_integral(curve, h)
    except SingularOperator:
        pass

    s1, s2 = _sign(lam1, lam2, zero_rtol), _sign(lam2, lam1, zero_rtol)
    if s1 >= 0:
        verdict, reason = Verdict.STABLE_UNCONSTRAINED, "lambda1 >= 0"
    elif s2 < 0:
        verdict, reason = Verdict.UNSTABLE_TWO_NEGATIVE, "lambda2 < 0"
    elif h is None:
        verdict, reason = Verdict.INAPPLICABLE, "NoSolution"
    elif h_int <= 0:
        verdict, reason = Verdict.STABLE, "constraint integral of h <= 0"
    else:
        verdict, reason = Verdict.UNSTABLE, "constraint integral of h > 0"
    if m1[0] is not None and _sign(m1[0], m1[1], zero_rtol) < 0:
        verdict, reason = Verdict.UNSTABLE, "NonAxisymmetricMode"

    samples = []
    tests = {"f1": f1}
    if h is not None:
        tests["h"] = h
        den = constraint_integral(curve, f1)
        if den != 0:
            tests["f1_h_constrained"] = -h_int / den * f1 + h
    for name, f in tests.items():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            samples.append({
                "id": name,
                "constraint": constraint_integral(curve, f),
                "d2G": second_variation_G(P0, curve, f),
                "d2H": second_variation_H(P0, curve, f),
                "d2E": second_variation_E(P0, curve, f, params),
            })

    psi_b = dn_psi = chain = None
    if curve.z_hat is not None and curve.r[0] == 0:
        psi = shoot_psi(curve, fields, params)
        psi_b, dn_psi = psi.boundary, psi.dn_boundary
        if (curve.stop is not None and curve.stop.kind is StopKind.PHI_MINUS_PI
                and params.c_o != 0):
            chain = bound_chain(curve, fields, params, psi)

    return StabilityReport(
        lambda1=float(lam1), lambda2=float(lam2), h_integral=h_int, verdict=verdict,
        reason=reason, psi_boundary=psi_b, dn_psi_boundary=dn_psi,
        mode1_lambda1=None if m1[0] is None else float(m1[0]),
        mode1_lambda2=None if m1[1] is None else float(m1[1]),
        quadratic_form_samples=samples,
        el_residuals=el_residuals_and_alpha_beta(curve, fields, params),
        bound_chain=chain, n=curve.n)
