"""Constrained stability of the horizontal-edged discs and of slightly larger domains.

For each apex height the script prints the first two mode-0 eigenvalues
(weight z^2), the constraint integral of h, where P[h] = -2, and the
verdict. It then extends each disc by 10% of its length. The mode-1
eigenvalue, which sits at zero on the disc itself, turns negative there.

Run:  python3 demos/disc_stability.py
"""

from membrane_stability import (ApexInit, ModelParams, StopRule, geometric_fields,
                                integrate_profile, resample, thmbif_verdict)


def report(label, curve, params):
    grid = resample(curve, 1024)
    rep = thmbif_verdict(grid, geometric_fields(grid), params)
    h_int = "n/a" if rep.h_integral is None else f"{rep.h_integral:9.4f}"
    print(f"  {label:<14} l1 {rep.lambda1:8.4f}  l2 {rep.lambda2:8.4f}  "
          f"int h/z^2 {h_int}  m=1 l1 {rep.mode1_lambda1:8.4f}  "
          f"{rep.verdict.value} ({rep.reason})")
    return rep


def main():
    params = ModelParams(2.0)
    for z_hat in (-0.55, -0.7, -0.9, -1.2):
        print(f"z_hat = {z_hat}")
        disc = integrate_profile(params, ApexInit(z_hat), StopRule("phi-pi"))
        rep = report("disc", disc, params)
        chain = rep.bound_chain
        print(f"  {'':<14} psi bound {chain['psi_integral']:.4f} < {chain['psi_bound']:.4f}, "
              f"q bound {chain['q_integral']:.4f} > {chain['q_bound']:.4f}")
        longer = integrate_profile(params, ApexInit(z_hat),
                                   StopRule("sigma-max", 1.1 * disc.event_sigma))
        report("10% larger", longer, params)


if __name__ == "__main__":
    main()
