import json

import numpy as np
import pytest
from scipy.optimize import brentq

from membrane_stability import (ApexInit, ModelParams, SingularOperator, StopRule, Verdict,
                                WeightKind, geometric_fields, integrate_profile, resample,
                                solve_dirichlet_spectrum, surface_integral)
from membrane_stability.io import to_json
from membrane_stability.operators import assemble
from membrane_stability.stability import (_sign, corollary_checks, el_residuals_and_alpha_beta,
                                          h_closed_form, second_variation_E,
                                          second_variation_G, second_variation_H, shoot_psi,
                                          solve_h, thmbif_verdict)
from oracles import bessel_i0

P2 = ModelParams(2.0)
ZSQ = WeightKind.Z_SQ


def _grid(curve, n):
    c = resample(curve, n)
    return c, geometric_fields(c)


def _extended(z_hat, factor, n=256):
    ell = float(integrate_profile(P2, ApexInit(z_hat), StopRule("phi-pi")).sigma[-1])
    return _grid(integrate_profile(P2, ApexInit(z_hat), StopRule("sigma-max", factor * ell)), n)


def test_sign_with_relative_zero():
    assert _sign(1e-4, 1.0) == 0
    assert _sign(-2e-3, 1.0) == -1
    assert _sign(5.0, -1.0) == 1


def test_h_on_plane_disc_matches_bessel_oracle(disc):
    errs = []
    for n in (64, 128, 256):
        c, f = _grid(disc, n)
        h = solve_h(assemble(c, f, P2, "P"), c)
        r = np.asarray(c.r, float)
        exact = 0.25 * (1 - bessel_i0(np.sqrt(8) * r) / bessel_i0(np.sqrt(8) * 0.3))
        errs.append(np.max(np.abs(h - exact)))
    assert errs[-1] < 1e-6
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2, abs=0.2)


def test_psi_on_plane_disc(disc):
    c, f = _grid(disc, 128)
    psi = shoot_psi(c, f, P2)
    r = np.asarray(c.r, float)
    assert np.allclose(psi.psi, bessel_i0(np.sqrt(8) * r), rtol=1e-9)
    eps = 1e-6
    slope = (bessel_i0(np.sqrt(8) * (r + eps)) - bessel_i0(np.sqrt(8) * (r - eps))) / (2 * eps)
    assert np.allclose(psi.dpsi, slope, atol=1e-8)
    assert psi.dn_boundary == pytest.approx(psi.dpsi[-1] / psi.psi[-1])
    h = solve_h(assemble(c, f, P2, "P"), c)
    assert np.max(np.abs(h - h_closed_form(f, P2, psi))) < 1e-5


def test_psi_requires_apex(sigma0):
    c = integrate_profile(P2, ApexInit(-0.7), StopRule("sigma-max", 1.0))
    from membrane_stability.profile import ProfileCurve
    cut = ProfileCurve(sigma=c.sigma[1:] - c.sigma[1], r=c.r[1:], z=c.z[1:], phi=c.phi[1:],
                       dphi=c.dphi[1:], params=P2)
    with pytest.raises(ValueError):
        shoot_psi(cut, geometric_fields(cut), P2)


@pytest.mark.parametrize("z_hat", [-0.55, -0.7, -0.9, -1.2])
def test_sigma0_mode0_verdict_is_stable(sigma0, z_hat):
    c, f = _grid(sigma0[z_hat], 512)
    rep = thmbif_verdict(c, f, P2, check_modes=False)
    assert rep.lambda1 < 0 <= rep.lambda2
    assert rep.verdict is Verdict.STABLE and rep.is_stable
    assert rep.h_integral < 0
    assert rep.bound_chain["psi_holds"] and rep.bound_chain["q_holds"]
    # the normalized derivative of psi at the edge is positive on these discs
    assert rep.dn_psi_boundary > 0


def test_sigma0_mode_one_eigenvalue_is_zero_within_tolerance(sigma0):
    c, f = _grid(sigma0[-0.9], 512)
    rep = thmbif_verdict(c, f, P2)
    assert abs(rep.mode1_lambda1) < 1e-3 * abs(rep.mode1_lambda2)
    assert rep.verdict is Verdict.STABLE


def test_superdomain_has_negative_nonaxisymmetric_mode():
    c, f = _extended(-0.7, 1.1)
    rep = thmbif_verdict(c, f, P2)
    assert rep.mode1_lambda1 < 0
    assert rep.verdict is Verdict.UNSTABLE and rep.reason == "NonAxisymmetricMode"
    assert rep.bound_chain is None


def test_two_negative_eigenvalues():
    c, f = _extended(-0.7, 1.6)
    rep = thmbif_verdict(c, f, P2, check_modes=False)
    assert rep.lambda2 < 0 and rep.verdict is Verdict.UNSTABLE_TWO_NEGATIVE


def test_nested_domains_lower_the_first_eigenvalue():
    lams = []
    for factor in (0.5, 0.75, 1.0, 1.2):
        c, f = _extended(-0.7, factor)
        lams.append(solve_dirichlet_spectrum(assemble(c, f, P2, "P"), ZSQ, 1)[0].lam)
    assert np.all(np.diff(lams) < 0)


def test_singular_P_gives_no_solution():
    def lam2(factor):
        c, f = _extended(-0.7, factor)
        return solve_dirichlet_spectrum(assemble(c, f, P2, "P"), ZSQ, 2)[1].lam

    root = brentq(lam2, 1.1, 1.3, xtol=1e-12)
    c, f = _extended(-0.7, root)
    with pytest.raises(SingularOperator):
        solve_h(assemble(c, f, P2, "P"), c)
    rep = thmbif_verdict(c, f, P2, check_modes=False)
    assert rep.verdict is Verdict.INAPPLICABLE and rep.reason == "NoSolution"
    assert rep.h_integral is None


def test_solve_h_rejects_other_operators(disc):
    c, f = _grid(disc, 64)
    with pytest.raises(ValueError):
        solve_h(assemble(c, f, P2, "P", mode=1), c)
    with pytest.raises(ValueError):
        solve_h(assemble(c, f, P2, "P", bc_outer="free"), c)


def test_second_variation_of_eigenfunction(sigma0):
    c, f = _grid(sigma0[-0.7], 512)
    op = assemble(c, f, P2, "P")
    pair = solve_dirichlet_spectrum(op, ZSQ, 1)[0]
    d2g = second_variation_G(op, c, pair.f)
    # -int f P f z^-2 = lambda int f^2 for a ZSq eigenfunction
    assert d2g == pytest.approx(pair.lam * surface_integral(c, pair.f**2), rel=1e-3)
    assert d2g < 0


def test_second_variation_warns_off_boundary(disc):
    c, f = _grid(disc, 64)
    op = assemble(c, f, P2, "P")
    with pytest.warns(RuntimeWarning):
        second_variation_H(op, c, np.ones_like(c.sigma))
    with pytest.warns(RuntimeWarning):
        second_variation_E(op, c, np.ones_like(c.sigma), P2)


def test_E_second_variation_of_nu3_on_vcap(vcap):
    vals = []
    for n in (256, 512):
        c, f = _grid(vcap, n)
        op = assemble(c, f, P2, "P")
        vals.append(second_variation_E(op, c, f.nu3, P2))
    rep = corollary_checks(c, f, P2)
    assert vals[-1] < 0
    assert vals[-1] == pytest.approx(rep["cor_value"], rel=1e-3)
    assert abs(vals[1] - rep["cor_value"]) < abs(vals[0] - rep["cor_value"])


def test_instability_checks_on_vcap(vcap_grid):
    c, f = vcap_grid
    el = el_residuals_and_alpha_beta(c, f, P2)
    assert el["C"] == pytest.approx(-0.3168, abs=1e-4)
    pair = el["pairs"][0]
    on_line = ModelParams(2.0, alpha=pair["alpha"], beta=pair["beta"])
    rep = corollary_checks(c, f, on_line)
    assert rep["cor_verdict"] == "Unstable" and rep["cor_value"] < 0
    # K > 0 at the boundary while alpha / r_o^2 - beta = C < 0
    assert rep["K_boundary"] > 0 and rep["cor2_sign"] < 0
    assert rep["cor2_verdict"] == "Unstable"
    off_line = corollary_checks(c, f, P2)
    assert off_line["cor2_verdict"] == "Inapplicable"
    assert corollary_checks(c, f, ModelParams(2.0, b=1.0))["cor_verdict"] == "Inapplicable"


def test_nu3_instability_inapplicable_on_sigma0(sigma0):
    c, f = _grid(sigma0[-0.7], 256)
    rep = corollary_checks(c, f, P2)
    assert rep["cor_verdict"] == "Inapplicable"
    assert "nu_3 = 0 on the boundary" in rep["cor_failed"]


def test_report_serializes(sigma0):
    c, f = _grid(sigma0[-1.2], 256)
    d = json.loads(to_json(thmbif_verdict(c, f, P2).to_dict()))
    assert d["verdict"] == "Stable"
    assert {s["id"] for s in d["quadratic_form_samples"]} == {"f1", "h", "f1_h_constrained"}
    constrained = next(s for s in d["quadratic_form_samples"] if s["id"] == "f1_h_constrained")
    assert abs(constrained["constraint"]) < 1e-10
    assert constrained["d2G"] >= 0


def test_plane_disc_is_stable_without_constraint(disc):
    c, f = _grid(disc, 256)
    rep = thmbif_verdict(c, f, P2)
    assert rep.lambda1 > 0 and rep.verdict is Verdict.STABLE_UNCONSTRAINED
    assert rep.bound_chain is None


def test_psi_matches_free_closure_null_vector(sphere_cap):
    p0 = ModelParams(0.0)
    errs = []
    for n in (128, 256):
        c, f = _grid(sphere_cap, n)
        A = assemble(c, f, p0, "P", bc_outer="free").reduced.toarray().astype(float)[:n]
        null = np.concatenate([[1.0], np.linalg.solve(A[:, 1:], -A[:, 0])])
        errs.append(np.max(np.abs(null - shoot_psi(c, f, p0).psi)))
    # |d nu|^2 = 2 = 2 (H + c_o)^2 on the unit sphere, so psi is constant and exact
    assert max(errs) < 1e-10


def test_psi_boundary_nonzero_on_sigma0(sigma0):
    c, f = _grid(sigma0[-0.55], 512)
    psi = shoot_psi(c, f, P2)
    assert abs(psi.boundary) > 0.1


def test_second_variation_H_of_eigenfunction(disc):
    c, f = _grid(disc, 512)
    op = assemble(c, f, P2, "P")
    pair = solve_dirichlet_spectrum(op, WeightKind.INV_Z_SQ, 1)[0]
    lam = pair.lam
    expected = 0.5 * lam * (lam - 2) * surface_integral(c, pair.f**2 / c.z**4)
    assert second_variation_H(op, c, pair.f) == pytest.approx(expected, rel=1e-3)


def test_second_variation_G_by_parts_on_plane_disc(disc):
    c, f = _grid(disc, 512)
    op = assemble(c, f, P2, "P")
    r = np.asarray(c.r, float)
    inside = np.abs(r - 0.15) < 0.1
    x = (r - 0.15) / 0.1
    bump = np.where(inside, np.cos(np.pi * x / 2) ** 4, 0.0)
    dbump = np.where(inside, -4 * np.cos(np.pi * x / 2) ** 3 * np.sin(np.pi * x / 2)
                     * np.pi / 0.2, 0.0)
    # -int f (Lap f - 8 f) z^-2 with z^-2 = 4
    expected = 4 * surface_integral(c, dbump**2 + 8 * bump**2)
    assert second_variation_G(op, c, bump) == pytest.approx(expected, rel=1e-4)
