import math

import numpy as np
import pytest

from membrane_stability import (ApexInit, EventNotFound, HalfSpaceExit, ModelParams,
                                StopKind, StopRule, integrate_profile, locate_event, resample)
from membrane_stability.profile import apex_expansion, ode_residual, profile_rhs
from oracles import profile_event_rk4, profile_rk4

# event locations frozen from the fixed-step RK4 oracle (step 1e-4 and 2e-4 agree to 3e-14)
VCAP_SIGMA_O = 0.73426438553094
SIGMA0_LENGTH = {-0.55: 1.97673007983399, -0.7: 1.60464538541744,
               -0.9: 1.48065868552549, -1.2: 1.41987948638365}


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(1.0, a=0.0)
    with pytest.raises(ValueError):
        ModelParams(1.0, alpha=-1.0)
    with pytest.raises(ValueError):
        ModelParams(1.0, beta=0.0)
    with pytest.raises(ValueError):
        ModelParams(float("nan"))
    assert ModelParams(-3.0, b=-2.0).c_o == -3.0


def test_apex_init_and_stop_rule_validation():
    with pytest.raises(ValueError):
        ApexInit(0.0)
    with pytest.raises(ValueError):
        ApexInit(1.0, delta=-1e-3)
    with pytest.raises(ValueError):
        StopRule("rprime-zero", sigma_max=0.0)
    assert StopRule("phi-pi").kind is StopKind.PHI_MINUS_PI


@pytest.mark.parametrize("c_o, z_hat, slope", [(2.0, 3.0, -7 / 3), (0.0, 1.0, -1.0),
                                               (2.0, -0.55, -2 / 11)])
def test_apex_slope(c_o, z_hat, slope):
    r, z, phi = apex_expansion(ModelParams(c_o), ApexInit(z_hat), 1e-7)
    assert phi / 1e-7 == pytest.approx(slope, rel=1e-9)
    assert r == pytest.approx(1e-7, rel=1e-9)
    c = integrate_profile(ModelParams(c_o), ApexInit(z_hat), StopRule("sigma-max", 0.1))
    assert c.apex_slope == pytest.approx(slope, rel=1e-15)


def test_apex_expansion_satisfies_ode():
    p, init = ModelParams(2.0), ApexInit(3.0)
    d = 1e-3
    states = [np.array(apex_expansion(p, init, s)) for s in (d - 1e-6, d, d + 1e-6)]
    deriv = (states[2] - states[0]) / 2e-6
    assert np.allclose(deriv, profile_rhs(d, states[1], 2.0), atol=1e-6)


def test_unit_sphere_exact():
    c = integrate_profile(ModelParams(0.0), ApexInit(1.0), StopRule("rprime-zero"))
    s = c.sigma
    err = max(np.max(np.abs(c.r - np.sin(s))), np.max(np.abs(c.z - np.cos(s))),
              np.max(np.abs(c.phi + s)))
    assert err < 1e-8
    assert abs(c.event_sigma - np.pi / 2) < 1e-10
    assert locate_event(c, StopRule("rprime-zero")) == pytest.approx(np.pi / 2, abs=1e-10)


def test_sphere_cap_resampled_against_closed_form(sphere_cap):
    c = resample(sphere_cap, 64)
    s = np.asarray(c.sigma, dtype=float)
    assert np.max(np.abs(np.asarray(c.r, float) - np.sin(s))) < 1e-8
    assert np.max(np.abs(np.asarray(c.z, float) - np.cos(s))) < 1e-8


def test_vcap_event_matches_oracle(vcap):
    assert vcap.event_sigma == pytest.approx(VCAP_SIGMA_O, abs=1e-9)
    assert abs(math.cos(vcap.phi[-1])) < 1e-10
    assert vcap.z[-1] > 0 and np.all(vcap.z > 0)
    _, ys = profile_rk4(2.0, 3.0, vcap.event_sigma, step=1e-4)
    assert np.allclose(ys[-1], [vcap.r[-1], vcap.z[-1], vcap.phi[-1]], atol=1e-9)


@pytest.mark.parametrize("z_hat", sorted(SIGMA0_LENGTH))
def test_sigma0_events(z_hat):
    c = integrate_profile(ModelParams(2.0), ApexInit(z_hat), StopRule("phi-pi"))
    assert c.event_sigma == pytest.approx(SIGMA0_LENGTH[z_hat], abs=1e-9)
    assert abs(c.phi[-1] + np.pi) < 1e-10
    assert np.all(c.z < 0)


def test_sigma0_length_oracle_consistency():
    ell, _ = profile_event_rk4(2.0, -0.7, lambda r, z, p: p + math.pi, step=2e-4)
    assert ell == pytest.approx(SIGMA0_LENGTH[-0.7], abs=1e-10)


def test_half_space_exit_above_threshold():
    # z_hat > -1/c_o does not give a disc below the plane z = 0
    with pytest.raises(HalfSpaceExit):
        integrate_profile(ModelParams(2.0), ApexInit(-0.3), StopRule("phi-pi"))


def test_event_not_found_before_cap():
    with pytest.raises(EventNotFound):
        integrate_profile(ModelParams(2.0), ApexInit(-0.7), StopRule("phi-pi", sigma_max=0.5))
    with pytest.raises(EventNotFound):
        locate_event(integrate_profile(ModelParams(2.0), ApexInit(-0.7),
                                       StopRule("sigma-max", 0.5)), StopRule("phi-pi"))


def test_locate_event_idempotent_and_from_longer_curve(vcap):
    assert locate_event(vcap, StopRule("rprime-zero")) == pytest.approx(vcap.event_sigma,
                                                                        abs=1e-12)
    longer = integrate_profile(ModelParams(2.0), ApexInit(3.0), StopRule("sigma-max", 0.9))
    assert locate_event(longer, StopRule("rprime-zero")) == pytest.approx(VCAP_SIGMA_O,
                                                                          abs=1e-10)


def test_resample_grid_and_precision(vcap):
    c = resample(vcap, 16)
    # the event is re-refined on the extended-precision solution
    assert c.n == 16 and c.sigma[0] == 0 and c.sigma[-1] == c.event_sigma
    assert float(c.sigma[-1]) == pytest.approx(VCAP_SIGMA_O, abs=1e-12)
    assert c.is_uniform()
    assert np.allclose(np.diff(np.asarray(c.sigma, float)), float(c.sigma[-1]) / 16)
    c = resample(vcap, 256)
    assert ode_residual(c) < 1e-8
    with pytest.raises(ValueError):
        resample(vcap, 8)


def test_mean_curvature_identity(vcap):
    c = resample(vcap, 256)
    r, z, phi = (np.asarray(v, float) for v in (c.r, c.z, c.phi))
    lhs = np.asarray(c.dphi, float)[1:] + np.sin(phi[1:]) / r[1:]
    rhs = -2 * np.cos(phi[1:]) / z[1:] - 4
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_reflection_symmetry():
    a = integrate_profile(ModelParams(2.0), ApexInit(3.0), StopRule("sigma-max", 0.7))
    b = integrate_profile(ModelParams(-2.0), ApexInit(-3.0), StopRule("sigma-max", 0.7))
    s = np.linspace(0, 0.7, 50)
    ra, za, pa = a.evaluate(s)
    rb, zb, pb = b.evaluate(s)
    assert np.allclose(ra, rb, atol=1e-9)
    assert np.allclose(za, -zb, atol=1e-9)
    assert np.allclose(pa, -pb, atol=1e-9)


def test_event_convergence_with_tolerance():
    errs = []
    for tol in (1e-6, 1e-8):
        c = integrate_profile(ModelParams(0.0), ApexInit(1.0), StopRule("sigma-max", 1.4), tol=tol)
        errs.append(np.max(np.abs(c.r - np.sin(c.sigma))))
    assert errs[1] < errs[0]
