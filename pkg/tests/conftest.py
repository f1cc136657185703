import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from axisym.spectrum import (Exponential, Indicator, Kronecker, LegendreMatern, Multiquadric,
                             Ones, SpectrumModel)

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20211)


@pytest.fixture
def example1():
    """Legendre-Matern tau2=100, nu=1.5 with ten longitudinal orders."""
    return SpectrumModel(LegendreMatern(100.0, 1.5), Kronecker(), Indicator(10))


@pytest.fixture
def irreversible():
    return SpectrumModel(LegendreMatern(100.0, 1.5), Exponential(1.0), Indicator(8), kappa=1.0)


@pytest.fixture
def isotropic():
    return SpectrumModel(Multiquadric(0.7), Kronecker(), Ones())


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k, (ok, detail) in sorted(acceptance.RESULTS.items()):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {detail}")
