"""Trace the two profile families and check the reduced membrane equation.

Run:  python3 demos/trace_profiles.py
"""

import numpy as np

from membrane_stability import (ApexInit, ModelParams, StopRule, boundary_darboux,
                                geometric_fields, integrate_profile, resample, rme_residual)


def main():
    params = ModelParams(2.0)

    print("Vertical-edge cap: c_o = 2, apex height 3, stop where r' = 0")
    cap = integrate_profile(params, ApexInit(3.0), StopRule("rprime-zero"))
    grid = resample(cap, 1024)
    fields = geometric_fields(grid)
    bd = boundary_darboux(grid, fields)
    print(f"  sigma_o = {cap.event_sigma:.12f}   r_o = {bd.r_o:.6f}   z_o = {bd.z_o:.6f}")
    print(f"  RME residual on 1025 nodes: {rme_residual(grid, fields, 2.0):.2e}")
    print(f"  boundary: kappa_n = {bd.kappa_n:.6f}, kappa_g = {bd.kappa_g:.1e}, "
          f"d_n nu3 = {bd.dn_nu3:.6f}")

    print("\nDiscs below the plane: stop where phi = -pi")
    print("  z_hat     length       r(l)       z(l)      min z")
    for z_hat in (-0.55, -0.7, -0.9, -1.2):
        c = integrate_profile(params, ApexInit(z_hat), StopRule("phi-pi"))
        print(f"  {z_hat:5.2f}  {c.event_sigma:.9f}  {float(c.r[-1]):.6f}  "
              f"{float(c.z[-1]):.6f}  {float(np.min(c.z)):.6f}")

    print("\nAbove z_hat = -1/c_o the curve reaches z = 0 first:")
    try:
        integrate_profile(params, ApexInit(-0.3), StopRule("phi-pi"))
    except Exception as exc:  # the library raises HalfSpaceExit here
        print(f"  z_hat = -0.3 -> {type(exc).__name__}: {exc}")


if __name__ == "__main__":
    main()
