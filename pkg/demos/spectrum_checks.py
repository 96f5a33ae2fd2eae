"""Spectral checks: the flat disc against Bessel zeros, and lambda = 2 on the cap.

Run:  python3 demos/spectrum_checks.py
"""

import numpy as np
from scipy.special import jn_zeros

from membrane_stability import (ApexInit, ModelParams, StopRule, WeightKind, assemble,
                                geometric_fields, integrate_profile, resample,
                                solve_dirichlet_spectrum)


def main():
    params = ModelParams(2.0)

    # On the plane z = -1/2 the operator is the Laplacian minus 8, so the
    # Dirichlet eigenvalues follow from the zeros of J_0.
    disc = integrate_profile(params, ApexInit(-0.5), StopRule("sigma-max", 0.3))
    print("Flat disc of radius 0.3 at z = -1/2")
    print("   n   lambda1 (z^-2)   expected        rel err")
    mu = (jn_zeros(0, 1)[0] / 0.3) ** 2
    for n in (128, 256, 512, 1024):
        c = resample(disc, n)
        op = assemble(c, geometric_fields(c), params, "P")
        lam = solve_dirichlet_spectrum(op, WeightKind.INV_Z_SQ, 1)[0].lam
        exact = 2 + mu / 4
        print(f"{n:5d}   {lam:.10f}   {exact:.10f}   {abs(lam / exact - 1):.2e}")

    # On the cap with a vertical edge, nu_3 vanishes on the boundary and
    # solves P[nu_3] = -2 nu_3 / z^2, so lambda = 2 is a Dirichlet eigenvalue.
    cap = integrate_profile(params, ApexInit(3.0), StopRule("rprime-zero"))
    c = resample(cap, 1024)
    fields = geometric_fields(c)
    pairs = solve_dirichlet_spectrum(assemble(c, fields, params, "P"), WeightKind.INV_Z_SQ, 3)
    print("\nVertical-edge cap, weight z^-2:", ", ".join(f"{p.lam:.6f}" for p in pairs))
    nu3 = np.asarray(fields.nu3, float)
    f = pairs[0].f
    err = np.max(np.abs(f / f[0] - nu3 / nu3[0]))
    print(f"first eigenfunction vs nu_3 (both scaled to 1 at the apex): max diff {err:.1e}")


if __name__ == "__main__":
    main()
