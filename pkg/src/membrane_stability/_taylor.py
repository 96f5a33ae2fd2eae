"""Extended-precision Taylor-series integration of the profile ODE.

The profile system

    r' = cos(phi),  z' = sin(phi),  phi' = -2 cos(phi)/z - sin(phi)/r - 2 c_o

is analytic away from z = 0, so a high-order Taylor method with recursive
power-series arithmetic reaches the rounding floor of ``np.longdouble``.
Fourth-difference operators need that floor: in binary64 the rounding
noise on the samples is amplified by ``1/h**4`` and swamps the
truncation error on fine grids.

The apex r = 0 is handled by dividing the series of sin(phi) by the
series of r exactly, so the removable singularity never appears.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularBlowup

LD = np.longdouble
ORDER = 30
SERIES_TOL = LD("1e-21")
PI = np.arccos(LD(-1))


@dataclass
class _Segment:
    start: LD
    end: LD
    r: np.ndarray
    z: np.ndarray
    phi: np.ndarray


def _series_coefficients(r0, z0, phi0, c_o, at_apex, order=ORDER):
    """Taylor coefficients of (r, z, phi) about a point of the solution."""
    K = order
    r = np.zeros(K + 2, dtype=LD)
    z = np.zeros(K + 2, dtype=LD)
    phi = np.zeros(K + 2, dtype=LD)
    C = np.zeros(K + 2, dtype=LD)
    S = np.zeros(K + 2, dtype=LD)
    Zi = np.zeros(K + 2, dtype=LD)
    Ri = np.zeros(K + 2, dtype=LD)
    B = np.zeros(K + 2, dtype=LD)
    jj = np.arange(K + 2, dtype=LD)

    r[0], z[0], phi[0] = r0, z0, phi0
    C[0], S[0] = np.cos(phi0), np.sin(phi0)
    Zi[0] = 1 / z0
    r[1], z[1] = C[0], S[0]
    if not at_apex:
        Ri[0] = 1 / r0

    for k in range(K):
        if k >= 1:
            Zi[k] = -Zi[0] * np.dot(z[1:k + 1], Zi[k - 1::-1])
        A = np.dot(C[:k + 1], Zi[k::-1])
        if at_apex:
            # sin(phi)/r with r = sigma + O(sigma^3) and r_1 = 1
            s_tilde = np.dot(jj[1:k + 1] * phi[1:k + 1], C[k:0:-1]) / (k + 1)
            b_tilde = s_tilde - (np.dot(r[2:k + 2], B[k - 1::-1]) if k else 0)
            phi[k + 1] = (-2 * A - b_tilde - (2 * c_o if k == 0 else 0)) / (k + 2)
            B[k] = phi[k + 1] + b_tilde
            S[k + 1] = s_tilde + phi[k + 1]
        else:
            if k >= 1:
                Ri[k] = -Ri[0] * np.dot(r[1:k + 1], Ri[k - 1::-1])
            B[k] = np.dot(S[:k + 1], Ri[k::-1])
            phi[k + 1] = (-2 * A - B[k] - (2 * c_o if k == 0 else 0)) / (k + 1)
            S[k + 1] = np.dot(jj[1:k + 2] * phi[1:k + 2], C[k::-1]) / (k + 1)
        C[k + 1] = -np.dot(jj[1:k + 2] * phi[1:k + 2], S[k::-1]) / (k + 1)
        r[k + 2] = C[k + 1] / (k + 2)
        z[k + 2] = S[k + 1] / (k + 2)
    return r[:K + 1], z[:K + 1], phi[:K + 1]


def _step_size(coeffs, tol=SERIES_TOL):
    """Largest step for which the last two series terms stay below tol."""
    K = len(coeffs) - 1
    s = np.inf
    for k in (K - 1, K):
        a = abs(coeffs[k])
        if a > 0:
            s = min(s, float((tol / a) ** (LD(1) / k)))
    return s


def _horner(coeffs, u):
    out = np.zeros_like(u) + coeffs[-1]
    for a in coeffs[-2::-1]:
        out = out * u + a
    return out


def _horner_derivative(coeffs, u):
    K = len(coeffs) - 1
    d = coeffs[1:] * np.arange(1, K + 1, dtype=LD)
    return _horner(d, u)


class TaylorSolution:
    """Piecewise Taylor representation of an apex-started profile."""

    def __init__(self, c_o, z_hat, sigma_end, order=ORDER, min_step=1e-10):
        self.c_o = LD(c_o)
        self.z_hat = LD(z_hat)
        self.segments: list[_Segment] = []
        sigma_end = LD(sigma_end)
        start = LD(0)
        r0, z0, phi0 = LD(0), self.z_hat, LD(0)
        at_apex = True
        while start < sigma_end:
            rc, zc, pc = _series_coefficients(r0, z0, phi0, self.c_o, at_apex, order)
            s = min(_step_size(rc), _step_size(zc), _step_size(pc))
            if s < min_step:
                raise SingularBlowup(
                    f"Taylor step collapsed to {s:.3e} at sigma={float(start):.6g}")
            end = min(sigma_end, start + LD(s))
            self.segments.append(_Segment(start, end, rc, zc, pc))
            u = np.array([end - start], dtype=LD)
            r0, z0, phi0 = _horner(rc, u)[0], _horner(zc, u)[0], _horner(pc, u)[0]
            start = end
            at_apex = False
        self._starts = np.array([seg.start for seg in self.segments], dtype=LD)

    @property
    def sigma_end(self):
        return self.segments[-1].end

    def evaluate(self, sigma, derivative=False):
        """Return (r, z, phi) at sigma, plus phi' when ``derivative``."""
        sigma = np.atleast_1d(np.asarray(sigma, dtype=LD))
        idx = np.searchsorted(self._starts, sigma, side="right") - 1
        idx = np.clip(idx, 0, len(self.segments) - 1)
        r = np.empty_like(sigma)
        z = np.empty_like(sigma)
        phi = np.empty_like(sigma)
        dphi = np.empty_like(sigma)
        for i in np.unique(idx):
            seg = self.segments[i]
            mask = idx == i
            u = sigma[mask] - seg.start
            r[mask] = _horner(seg.r, u)
            z[mask] = _horner(seg.z, u)
            phi[mask] = _horner(seg.phi, u)
            if derivative:
                dphi[mask] = _horner_derivative(seg.phi, u)
        if derivative:
            return r, z, phi, dphi
        return r, z, phi

    def refine_root(self, kind, guess, iterations=20):
        """Newton iteration on the series for an event function.

        ``kind`` is one of "cos" (cos phi = 0), "phi" (phi = -pi) or "z".
        """
        s = LD(guess)
        for _ in range(iterations):
            r, z, phi, dphi = self.evaluate(s, derivative=True)
            r, z, phi, dphi = r[0], z[0], phi[0], dphi[0]
            if kind == "cos":
                g, dg = np.cos(phi), -np.sin(phi) * dphi
            elif kind == "phi":
                g, dg = phi + PI, dphi
            elif kind == "z":
                g, dg = z, np.sin(phi)
            else:
                raise ValueError(f"unknown event kind {kind!r}")
            if dg == 0:
                break
            step = g / dg
            s = s - step
            if abs(step) <= 4 * np.finfo(LD).eps * max(LD(1), abs(s)):
                break
        return s
