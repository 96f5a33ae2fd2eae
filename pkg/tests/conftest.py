import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from membrane_stability import (ApexInit, ModelParams, StopRule, geometric_fields,  # noqa: E402
                                integrate_profile, resample)

SIGMA0_HEIGHTS = (-0.55, -0.7, -0.9, -1.2)


@pytest.fixture(scope="session")
def vcap():
    return integrate_profile(ModelParams(2.0), ApexInit(3.0), StopRule("rprime-zero"))


@pytest.fixture(scope="session")
def vcap_grid(vcap):
    c = resample(vcap, 1024)
    return c, geometric_fields(c)


@pytest.fixture(scope="session")
def disc():
    """Plane disc of radius 0.3 at z = -1/2, an exact solution for c_o = 2."""
    return integrate_profile(ModelParams(2.0), ApexInit(-0.5), StopRule("sigma-max", 0.3))


@pytest.fixture(scope="session")
def sphere_cap():
    return integrate_profile(ModelParams(0.0), ApexInit(1.0), StopRule("sigma-max", np.pi / 3))


@pytest.fixture(scope="session")
def sigma0():
    p = ModelParams(2.0)
    return {zh: integrate_profile(p, ApexInit(zh), StopRule("phi-pi")) for zh in SIGMA0_HEIGHTS}


@pytest.fixture(scope="session")
def j01():
    from oracles import bessel_j0_first_zero
    return bessel_j0_first_zero()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
