import numpy as np
import pytest
import scipy.sparse as sp

from membrane_stability import ModelParams, geometric_fields, resample
from membrane_stability.operators import (OPERATORS, apply, assemble, assemble_F,
                                          convergence_slope, identity_study, identity_suite,
                                          to_coordinate_text)
from membrane_stability.profile import ProfileCurve

P2 = ModelParams(2.0)


@pytest.fixture(scope="module")
def disc_grid(disc):
    c = resample(disc, 128)
    return c, geometric_fields(c)


def test_convergence_slope():
    ns = [100, 200, 400]
    assert convergence_slope(ns, [3 / n**2 for n in ns]) == pytest.approx(2, abs=1e-12)


@pytest.mark.parametrize("which", sorted(OPERATORS))
def test_mass_weighted_operator_is_symmetric(vcap_grid, which):
    c, f = vcap_grid
    op = assemble(c, f, P2, which)
    m = op.mass[op.active]
    A = (sp.diags(m) @ op.reduced).toarray()
    assert np.max(np.abs(A - A.T)) < 1e-12 * np.max(np.abs(A))
    diag, off, mass = op.symmetric_form()
    assert np.allclose(diag, np.diag(A), rtol=1e-14, atol=0)
    assert np.allclose(off, np.diag(A, 1), rtol=1e-14, atol=0)


def test_plane_disc_quadratic_is_exact(disc_grid):
    c, f = disc_grid
    r = np.asarray(c.r, float)
    g = 1 - r**2
    # on the plane z = -1/2: P = Laplacian - 8, L = CalL = Laplacian
    assert np.max(np.abs(apply(assemble(c, f, P2, "P"), g) - (-4 - 8 * g))) < 1e-10
    assert np.max(np.abs(apply(assemble(c, f, P2, "L"), g) + 4)) < 1e-10
    assert np.max(np.abs(apply(assemble(c, f, P2, "Pstar"), g) - (-4 - 8 * g))) < 1e-10


def test_plane_disc_mode_two_converges(disc):
    errs = []
    for n in (64, 128, 256):
        c = resample(disc, n)
        r = np.asarray(c.r, float)
        g = r**2 * (1 - r**2 / 0.09)
        exact = (-12 / 0.09) * r**2 - 8 * g  # Delta_2 r^4 = 12 r^2
        out = apply(assemble(c, geometric_fields(c), P2, "P", mode=2), g)
        errs.append(np.max(np.abs(out - exact)[1:-1]))
    assert convergence_slope([64, 128, 256], errs) == pytest.approx(2, abs=0.3)


def test_jacobi_fields_on_sphere_cap(sphere_cap):
    res = []
    for n in (256, 512):
        c = resample(sphere_cap, n)
        res.append(identity_suite(c, geometric_fields(c), ModelParams(0.0)))
    # q = 1 on the unit sphere, so P[q] = 0 holds to rounding
    assert res[1]["P_q"] < 1e-10
    for key in ("easyP", "easyPstar", "PPstar", "int", "P_nu3", "F_nu3", "P1_nu_r", "F1_nu_r"):
        assert res[0][key] / res[1][key] == pytest.approx(4, rel=0.1), key


def test_identity_study_on_vcap_orders(vcap):
    study = identity_study(vcap, (128, 256))
    assert set(study.slopes) >= {"easyP", "easyPstar", "PPstar", "int", "P_nu3", "P_q",
                                 "F_nu3", "P1_nu_r", "F1_nu_r"}
    for key in ("easyP", "PPstar", "P_nu3", "P_q"):
        assert study.slopes[key] == pytest.approx(2, abs=0.3), key


def test_F_annihilates_nu3_and_mode_one_nu_r(vcap_grid):
    c, f = vcap_grid
    F = assemble_F(c, f, P2)
    assert F.which == "F"
    assert np.max(np.abs(apply(F, f.nu3))) < 1e-3
    F1 = assemble_F(c, f, P2, mode=1)
    assert np.max(np.abs(apply(F1, f.nu_r))) < 1e-3


def test_coordinate_text_roundtrip(disc_grid):
    c, f = disc_grid
    op = assemble(c, f, P2, "CalL")
    rows, cols, vals = np.loadtxt(to_coordinate_text(op).splitlines(), unpack=True)
    back = sp.csr_matrix((vals, (rows.astype(int), cols.astype(int))), shape=op.full.shape)
    ref = op.full.astype(float)
    assert abs(back - ref).max() <= 1e-15 * abs(ref).max()
    assert to_coordinate_text(op) == to_coordinate_text(assemble(c, f, P2, "CalL"))


def test_boundary_condition_validation(disc_grid):
    c, f = disc_grid
    with pytest.raises(ValueError, match="m >= 1"):
        assemble(c, f, P2, "P", mode=1, bc_apex="regular")
    with pytest.raises(ValueError):
        assemble(c, f, P2, "P", bc_apex="none")
    with pytest.raises(ValueError):
        assemble(c, f, P2, "Q")
    with pytest.raises(ValueError):
        assemble(c, f, P2, "P", mode=-1)
    with pytest.raises(ValueError):
        assemble(c, f, P2, "P", bc_outer="neumann")
    with pytest.raises(ValueError):
        apply(assemble(c, f, P2, "P"), np.ones(5))


def test_active_sets(disc_grid):
    c, f = disc_grid
    assert list(assemble(c, f, P2, "P").active[[0, -1]]) == [0, c.n - 1]
    assert list(assemble(c, f, P2, "P", mode=1).active[[0, -1]]) == [1, c.n - 1]
    free = assemble(c, f, P2, "P", bc_outer="free")
    assert free.active[-1] == c.n and free.reduced.shape == (c.n + 1, c.n + 1)
    with pytest.raises(ValueError):
        free.symmetric_form()


def test_sign_change_of_z_is_rejected():
    s = np.linspace(0, 1, 65)
    c = ProfileCurve(sigma=s, r=s + 1, z=s - 0.5, phi=np.zeros_like(s), dphi=np.zeros_like(s),
                     params=P2)
    f = geometric_fields(c)
    assemble(c, f, P2, "L", bc_apex="none")
    with pytest.raises(ValueError, match="one sign"):
        assemble(c, f, P2, "P", bc_apex="none")
