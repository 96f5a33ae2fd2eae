"""Axisymmetric profile curves of the reduced membrane equation.

A profile is the generating curve (r(s), z(s)) of a surface of revolution,
parametrised by arc length with tangent angle phi. It solves

    r' = cos(phi),  z' = sin(phi),  phi' = -2 cos(phi)/z - sin(phi)/r - 2 c_o

from the apex r = 0, z = z_hat, phi = 0. The apex is a removable
singularity; integration starts a short distance away using the power
series of the solution.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from ._taylor import PI as PI_LD
from ._taylor import TaylorSolution
from .errors import EventNotFound, HalfSpaceExit, SingularBlowup

BLOWUP_CURVATURE = 1e6
DEFAULT_SIGMA_CAP = 50.0


@dataclass(frozen=True)
class ModelParams:
    """Material constants of the boundary-value problem.

    ``c_o`` is the spontaneous curvature, ``a`` and ``b`` the bending and
    Gaussian moduli, ``alpha`` and ``beta`` the edge coefficients.
    """

    c_o: float
    a: float = 1.0
    b: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        for name in ("c_o", "a", "b", "alpha", "beta"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("a", "alpha", "beta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class ApexInit:
    """Apex height and the arc-length offset used to leave the apex."""

    z_hat: float
    delta: Optional[float] = None

    def __post_init__(self):
        if not np.isfinite(self.z_hat) or self.z_hat == 0:
            raise ValueError("z_hat must be finite and non-zero")
        if self.delta is not None and not (0 < self.delta < 1e-2):
            raise ValueError("delta must lie in (0, 1e-2)")

    def offset(self, c_o: float) -> float:
        if self.delta is not None:
            return float(self.delta)
        return max(1e-6, 1e-3 * min(abs(self.z_hat), 1.0 / (1.0 + abs(c_o))))


class StopKind(str, enum.Enum):
    RPRIME_ZERO = "rprime-zero"
    PHI_MINUS_PI = "phi-pi"
    Z_ZERO = "z-zero"
    SIGMA_MAX = "sigma-max"


@dataclass(frozen=True)
class StopRule:
    kind: StopKind
    sigma_max: float = DEFAULT_SIGMA_CAP

    def __post_init__(self):
        object.__setattr__(self, "kind", StopKind(self.kind))
        if not (self.sigma_max > 0 and np.isfinite(self.sigma_max)):
            raise ValueError("sigma_max must be positive and finite")


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Samples of a profile curve on increasing arc length.

    ``dphi`` holds the meridian curvature phi'. ``dense`` evaluates
    (r, z, phi) between samples. Curves produced by :func:`resample`
    carry extended-precision arrays and half-node values ``r_mid`` and
    ``z_mid`` used by the divergence-form operators.
    """

    sigma: np.ndarray
    r: np.ndarray
    z: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    params: ModelParams
    z_hat: Optional[float] = None
    stop: Optional[StopRule] = None
    event_sigma: Optional[float] = None
    dense: Optional[Callable] = field(default=None, repr=False)
    r_mid: Optional[np.ndarray] = field(default=None, repr=False)
    z_mid: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if np.any(np.diff(self.sigma) <= 0):
            raise ValueError("sigma must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.sigma) - 1

    @property
    def length(self) -> float:
        return float(self.sigma[-1] - self.sigma[0])

    @property
    def apex_slope(self) -> Optional[float]:
        if self.z_hat is None:
            return None
        return -(1.0 / self.z_hat + self.params.c_o)

    @property
    def has_apex(self) -> bool:
        return self.r[0] == 0

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        h = np.diff(self.sigma)
        return bool(np.max(np.abs(h - h.mean())) <= rtol * abs(h.mean()))

    def evaluate(self, sigma):
        if self.dense is None:
            raise ValueError("curve has no dense representation")
        return self.dense(sigma)


def profile_rhs(sigma, y, c_o):
    r, z, phi = y
    c, s = np.cos(phi), np.sin(phi)
    return np.array([c, s, -2.0 * c / z - s / r - 2.0 * c_o])


def _phi_prime(r, z, phi, c_o, apex_slope):
    r = np.asarray(r)
    safe_r = np.where(r == 0, 1, r)
    out = -2 * np.cos(phi) / z - np.sin(phi) / safe_r - 2 * c_o
    return np.where(r == 0, apex_slope, out)


def apex_expansion(params: ModelParams, init: ApexInit, sigma):
    """Power series of (r, z, phi) about the apex, valid for small sigma.

    With k = -(1/z_hat + c_o) and p = -c_o k / (4 z_hat),

        phi = k s + p s^3,  r = s - k^2 s^3 / 6,
        z = z_hat + k s^2 / 2 + (p - k^3 / 6) s^4 / 4.
    """
    s = np.asarray(sigma, dtype=float)
    zh, c_o = init.z_hat, params.c_o
    k = -(1.0 / zh + c_o)
    p = -c_o * k / (4.0 * zh)
    phi = k * s + p * s**3
    r = s - k**2 * s**3 / 6.0
    z = zh + k * s**2 / 2.0 + (p - k**3 / 6.0) * s**4 / 4.0
    return r, z, phi


def _event_function(kind: StopKind):
    if kind is StopKind.RPRIME_ZERO:
        return lambda r, z, phi: np.cos(phi)
    if kind is StopKind.PHI_MINUS_PI:
        return lambda r, z, phi: phi + np.pi
    if kind is StopKind.Z_ZERO:
        return lambda r, z, phi: z
    return None


def integrate_profile(params: ModelParams, init: ApexInit, stop: StopRule,
                      tol: float = 1e-10) -> ProfileCurve:
    """Integrate from the apex until the stopping event.

    Raises :class:`EventNotFound`, :class:`SingularBlowup` or
    :class:`HalfSpaceExit` when the curve cannot reach the event.
    """
    if not (0 < tol < 1e-3):
        raise ValueError("tol must lie in (0, 1e-3)")
    c_o = params.c_o
    delta = init.offset(c_o)
    cap = stop.sigma_max
    if cap <= delta:
        raise ValueError("sigma_max must exceed the apex offset")
    y0 = np.array(apex_expansion(params, init, delta), dtype=float)
    kind = stop.kind
    sign_z = np.sign(init.z_hat)

    def ev_target(s, y):
        return _event_function(kind)(*y)

    ev_target.terminal = True
    ev_target.direction = {StopKind.RPRIME_ZERO: -1, StopKind.PHI_MINUS_PI: -1,
                           StopKind.Z_ZERO: -sign_z}.get(kind, 0)

    def ev_half(s, y):
        return y[1]

    ev_half.terminal = True

    def ev_blow(s, y):
        return BLOWUP_CURVATURE - abs(profile_rhs(s, y, c_o)[2])

    ev_blow.terminal = True

    def ev_axis(s, y):
        return y[0]

    ev_axis.terminal = True
    ev_axis.direction = -1

    events = [ev_half, ev_blow, ev_axis]
    if kind is not StopKind.SIGMA_MAX:
        events = [ev_target] + events
        if kind is StopKind.Z_ZERO:
            events.remove(ev_half)

    sol = solve_ivp(lambda s, y: profile_rhs(s, y, c_o), (delta, cap), y0,
                    method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=True, events=events)
    if sol.status == -1:
        raise SingularBlowup(f"integrator failed: {sol.message}")

    hit = {fn: float(te[0]) for fn, te in zip(events, sol.t_events) if len(te)}
    # the requested event wins a tie with a guard event (unit sphere: cos(phi)
    # and z vanish together)
    t_target = hit.pop(ev_target, None)
    if t_target is None and ev_target in events and ev_half in hit:
        if abs(ev_target(sol.t[-1], sol.y[:, -1])) < 1e-8:
            t_target = hit.pop(ev_half)
    guards = {fn: t for fn, t in hit.items()
              if t_target is None or t < t_target - 1e-9}
    if ev_blow in guards:
        raise SingularBlowup(f"|phi'| exceeded {BLOWUP_CURVATURE:g} near "
                             f"sigma={guards[ev_blow]:.6g}")
    if ev_half in guards:
        raise HalfSpaceExit(f"profile crossed z = 0 at sigma={guards[ev_half]:.6g}")
    if ev_axis in guards:
        raise SingularBlowup(f"profile returned to the axis at "
                             f"sigma={guards[ev_axis]:.6g}")

    sigma = np.concatenate([[0.0], sol.t])
    y = np.column_stack([[0.0, init.z_hat, 0.0], sol.y])
    r, z, phi = y
    event_sigma = None
    k = -(1.0 / init.z_hat + c_o)

    def dense(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty((3, s.size))
        near = s < delta
        if near.any():
            out[:, near] = np.array(apex_expansion(params, init, s[near]))
        if (~near).any():
            out[:, ~near] = sol.sol(s[~near])
        return out[0], out[1], out[2]

    if kind is not StopKind.SIGMA_MAX:
        if t_target is None:
            raise EventNotFound(f"{kind.value} event not reached before sigma={cap:g}")
        event_sigma = _bisect(dense, _event_function(kind), sigma[-2], sigma[-1])
        sigma[-1] = event_sigma
        r[-1], z[-1], phi[-1] = (v[0] for v in dense(event_sigma))

    dphi = _phi_prime(r, z, phi, c_o, k)
    return ProfileCurve(sigma=sigma, r=r, z=z, phi=phi, dphi=dphi, params=params,
                        z_hat=init.z_hat, stop=stop, event_sigma=event_sigma,
                        dense=dense)


def _bisect(dense, g, lo, hi, tol=1e-12):
    glo = g(*(v[0] for v in dense(lo)))
    ghi = g(*(v[0] for v in dense(hi)))
    if glo == 0:
        return float(lo)
    if ghi == 0 or np.sign(glo) == np.sign(ghi):
        return float(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = g(*(v[0] for v in dense(mid)))
        if np.sign(gm) == np.sign(glo):
            lo, glo = mid, gm
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def locate_event(curve: ProfileCurve, stop: StopRule, tol: float = 1e-12) -> float:
    """Arc length of the first occurrence of the stopping event on a curve."""
    if stop.kind is StopKind.SIGMA_MAX:
        if stop.sigma_max <= curve.sigma[-1]:
            return float(stop.sigma_max)
        raise EventNotFound("sigma_max lies beyond the curve")
    g = _event_function(stop.kind)
    vals = g(np.asarray(curve.r, dtype=float), np.asarray(curve.z, dtype=float),
             np.asarray(curve.phi, dtype=float))
    change = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
    if abs(vals[-1]) <= 1e-8 and (len(change) == 0 or change[0] >= len(vals) - 2):
        return float(curve.sigma[-1])
    if len(change) == 0:
        raise EventNotFound(f"{stop.kind.value} event not found on curve")
    i = int(change[0])
    if curve.dense is None:
        s0, s1 = curve.sigma[i], curve.sigma[i + 1]
        return float(s0 - vals[i] * (s1 - s0) / (vals[i + 1] - vals[i]))

    def dense64(s):
        return tuple(np.asarray(v, dtype=float) for v in curve.dense(s))

    return _bisect(dense64, g, float(curve.sigma[i]), float(curve.sigma[i + 1]), tol)


_TAYLOR_KIND = {StopKind.RPRIME_ZERO: "cos", StopKind.PHI_MINUS_PI: "phi",
                StopKind.Z_ZERO: "z"}


def resample(curve: ProfileCurve, n: int) -> ProfileCurve:
    """Re-evaluate an apex-started curve on n + 1 uniform nodes.

    The curve is re-integrated with an extended-precision Taylor method,
    the stopping event is refined on that solution, and nodes, half-nodes
    and phi' are produced in ``np.longdouble``.
    """
    if n < 16:
        raise ValueError("n must be at least 16")
    if curve.z_hat is None:
        raise ValueError("resampling needs an apex-started curve")
    c_o = curve.params.c_o
    end = np.longdouble(curve.sigma[-1])
    refine = curve.event_sigma is not None and curve.stop is not None
    taylor = TaylorSolution(c_o, curve.z_hat, end * (1 + 1e-6) if refine else end)
    if refine:
        end = taylor.refine_root(_TAYLOR_KIND[curve.stop.kind], end)
        if end > taylor.sigma_end:
            taylor = TaylorSolution(c_o, curve.z_hat, end)
    sigma = end * np.arange(n + 1, dtype=np.longdouble) / n
    sigma[-1] = end
    r, z, phi, dphi = taylor.evaluate(sigma, derivative=True)
    mid = (sigma[:-1] + sigma[1:]) / 2
    r_mid, z_mid, _ = taylor.evaluate(mid)
    r[0], phi[0] = 0, 0
    if curve.stop is not None and curve.stop.kind is StopKind.PHI_MINUS_PI and refine:
        phi[-1] = -PI_LD
    return ProfileCurve(sigma=sigma, r=r, z=z, phi=phi, dphi=dphi,
                        params=curve.params, z_hat=curve.z_hat, stop=curve.stop,
                        event_sigma=(end if refine else None),
                        dense=taylor.evaluate, r_mid=r_mid, z_mid=z_mid)


def ode_residual(curve: ProfileCurve) -> float:
    """Max deviation between a fourth-order difference of phi and the ODE.

    Only interior nodes with two neighbours on each side are used, so the
    check is independent of how ``dphi`` was produced.
    """
    if not curve.is_uniform() or curve.n < 8:
        raise ValueError("ode_residual needs a uniform curve with n >= 8")
    h = curve.sigma[1] - curve.sigma[0]
    p = curve.phi
    fd = (-p[4:] + 8 * p[3:-1] - 8 * p[1:-3] + p[:-4]) / (12 * h)
    rhs = _phi_prime(curve.r[2:-2], curve.z[2:-2], p[2:-2], curve.params.c_o,
                     curve.apex_slope)
    return float(np.max(np.abs(fd - rhs)))
