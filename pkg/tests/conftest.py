import math

import numpy as np
import pytest

import confconv as cc

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        status = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")


@pytest.fixture(scope="session")
def torus_2pi():
    return cc.flat_torus(2, 2 * math.pi)


@pytest.fixture(scope="session")
def flat_spec(torus_2pi):
    return cc.MetricSpec(torus_2pi, cc.ConstantFactor(1.0), "flat", bounds=(1.0, 1.0))


@pytest.fixture(scope="session")
def mesh128(torus_2pi):
    return cc.build_mesh(torus_2pi, 128, 3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
