"""Pointwise geometry, boundary data and energy functionals on a profile.

Orientation: the unit normal is nu = (-sin(phi) cos(theta),
-sin(phi) sin(theta), cos(phi)), so nu_3 = cos(phi) and the radial part is
nu_r = -sin(phi). The principal curvatures are kappa_m = phi' (meridian)
and kappa_p = sin(phi)/r (parallel), with 2H = kappa_m + kappa_p. Under this
convention the unit sphere has H = -1. The outward conormal at the last
node is n = (cos(phi) cos(theta), cos(phi) sin(theta), sin(phi)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profile import ModelParams, ProfileCurve


@dataclass(frozen=True, eq=False)
class FieldTable:
    sigma: np.ndarray
    H: np.ndarray
    K: np.ndarray
    nu3: np.ndarray
    nu_r: np.ndarray
    q: np.ndarray
    kappa_m: np.ndarray
    kappa_p: np.ndarray

    @property
    def dnu_sq(self):
        """Squared norm of the differential of the Gauss map."""
        return self.kappa_m**2 + self.kappa_p**2


@dataclass(frozen=True)
class BoundaryData:
    r_o: float
    z_o: float
    phi_o: float
    kappa: float
    kappa_n: float
    kappa_g: float
    tau_g: float
    kappa_m: float
    H: float
    nu3: float
    dn_z: float
    dn_nu3: float
    dn_H: float
    dn_q: float


def geometric_fields(curve: ProfileCurve) -> FieldTable:
    r, phi = curve.r, curve.phi
    kappa_m = curve.dphi
    apex = r == 0
    safe_r = np.where(apex, 1, r)
    kappa_p = np.where(apex, kappa_m, np.sin(phi) / safe_r)
    if apex.any() and curve.apex_slope is not None:
        kappa_m = np.where(apex, curve.apex_slope, kappa_m)
        kappa_p = np.where(apex, curve.apex_slope, kappa_p)
    return FieldTable(
        sigma=curve.sigma,
        H=(kappa_m + kappa_p) / 2,
        K=kappa_m * kappa_p,
        nu3=np.cos(phi),
        nu_r=-np.sin(phi),
        q=-r * np.sin(phi) + curve.z * np.cos(phi),
        kappa_m=kappa_m,
        kappa_p=kappa_p,
    )


def rme_pointwise(curve: ProfileCurve, fields: FieldTable, c_o: float):
    return fields.H + c_o + fields.nu3 / curve.z


def rme_residual(curve: ProfileCurve, fields: FieldTable, c_o: float) -> float:
    """Max-norm residual of H + c_o + nu_3 / z."""
    return float(np.max(np.abs(rme_pointwise(curve, fields, c_o))))


def flux_scalar(curve: ProfileCurve, fields: FieldTable, c_o: float,
                guard: float = 1e-10):
    """Max of |nu_3/(H + c_o) + z| and the indices skipped by the guard."""
    denom = fields.H + c_o
    ok = np.abs(denom) >= guard
    skipped = np.nonzero(~ok)[0]
    if not ok.any():
        return 0.0, skipped
    vals = fields.nu3[ok] / denom[ok] + curve.z[ok]
    return float(np.max(np.abs(vals))), skipped


def boundary_darboux(curve: ProfileCurve, fields: FieldTable) -> BoundaryData:
    """Darboux frame data of the boundary parallel at the last node.

    Frame quantities are pointwise; the normal derivatives of z, nu_3, H and
    q use the one-sided stencil of :func:`normal_derivative`.
    """
    r, z, phi = curve.r[-1], curve.z[-1], curve.phi[-1]
    if r <= 0:
        raise ValueError("boundary parallel has zero radius")
    s, c = np.sin(phi), np.cos(phi)
    return BoundaryData(
        r_o=float(r), z_o=float(z), phi_o=float(phi), kappa=float(1 / r),
        kappa_n=float(s / r), kappa_g=float(-c / r), tau_g=0.0,
        kappa_m=float(fields.kappa_m[-1]), H=float(fields.H[-1]), nu3=float(c),
        dn_z=float(normal_derivative(curve, curve.z)),
        dn_nu3=float(normal_derivative(curve, fields.nu3)),
        dn_H=float(normal_derivative(curve, fields.H)),
        dn_q=float(normal_derivative(curve, fields.q)))


def normal_derivative(curve: ProfileCurve, f) -> float:
    """One-sided three-point derivative of f along the curve at the last node."""
    s = curve.sigma[-3:]
    f = np.asarray(f)[-3:]
    h1, h2 = s[2] - s[1], s[1] - s[0]
    w0 = h1 / (h2 * (h1 + h2))
    w1 = -(h1 + h2) / (h1 * h2)
    w2 = (2 * h1 + h2) / (h1 * (h1 + h2))
    return w0 * f[0] + w1 * f[1] + w2 * f[2]


def _trapezoid(sigma, y):
    return np.sum((sigma[1:] - sigma[:-1]) * (y[1:] + y[:-1])) / 2


def surface_integral(curve: ProfileCurve, g, mode: int = 0,
                     richardson: bool = False):
    """Integral of g over the surface of revolution.

    Composite trapezoid rule on int g r dsigma, times 2 pi for mode 0 or pi
    for mode m >= 1 (the mean square of cos(m theta)). With ``richardson``
    the rule is extrapolated against the same rule on every other node,
    which needs a uniform grid with an even number of intervals.
    """
    if mode < 0:
        raise ValueError("mode must be non-negative")
    g = np.broadcast_to(np.asarray(g), curve.sigma.shape)
    y = g * curve.r
    total = _trapezoid(curve.sigma, y)
    if richardson:
        if curve.n % 2 or not curve.is_uniform():
            raise ValueError("Richardson refinement needs a uniform grid with even n")
        coarse = _trapezoid(curve.sigma[::2], y[::2])
        total = (4 * total - coarse) / 3
    factor = 2 * np.pi if mode == 0 else np.pi
    return factor * total


def potential_volume_integral(curve: ProfileCurve, fields: FieldTable = None,
                              richardson: bool = False):
    """Integral of z^-2 over the region closed off by the boundary disc.

    The position field X / z^2 has divergence 1/z^2, so the volume integral
    is its flux through the surface (support function q / z^2, oriented by
    nu) plus its flux through the disc at height z_o, -pi r_o^2 / z_o.
    """
    z = curve.z
    if np.any(z == 0) or np.any(np.sign(z) != np.sign(z[0])):
        raise ValueError("curve must stay in one open half-space")
    if fields is None:
        q = -curve.r * np.sin(curve.phi) + z * np.cos(curve.phi)
    else:
        q = fields.q
    surface = surface_integral(curve, q / z**2, 0, richardson)
    return surface - np.pi * curve.r[-1] ** 2 / z[-1]


def energies(curve: ProfileCurve, fields: FieldTable, params: ModelParams,
             richardson: bool = None) -> dict:
    """Energy functionals of the surface as a flat record of floats."""
    if richardson is None:
        richardson = curve.is_uniform() and curve.n % 2 == 0
    c_o, a, b = params.c_o, params.a, params.b
    r_o = curve.r[-1]
    helfrich = surface_integral(curve, (fields.H + c_o) ** 2, 0, richardson)
    gauss = surface_integral(curve, fields.K, 0, richardson)
    out = {
        "helfrich": float(helfrich),
        "gauss": float(b * gauss),
        "total_curvature": float(gauss),
        "geodesic_curvature_integral": float(-2 * np.pi * np.cos(curve.phi[-1])),
    }
    if r_o > 0:
        boundary = 2 * np.pi * r_o * (params.alpha / r_o**2 + params.beta)
    else:
        boundary = 0.0
    out["boundary_elastic"] = float(boundary)
    out["euler_helfrich"] = float(a * helfrich + b * gauss + boundary)
    if np.all(np.sign(curve.z) == np.sign(curve.z[0])) and np.all(curve.z != 0):
        area = surface_integral(curve, 1 / curve.z**2, 0, richardson)
        potential = potential_volume_integral(curve, fields, richardson)
        out["hyperbolic_area"] = float(area)
        out["potential"] = float(potential)
        out["G"] = float(area - 2 * c_o * potential)
    return out
