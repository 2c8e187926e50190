import math

import pytest

from eeplan.netmodel import PowerProfile, SystemParams, kappa_from_carrier
from eeplan.optimizer import OptimizationBounds


def dbm(x):
    return 10.0 ** ((x - 30.0) / 10.0)


def cell_density(radius_m):
    return 1.0 / (math.pi * radius_m**2)


REF_KW = dict(
    beta=3.5,
    kappa=kappa_from_carrier(2.1e9),
    bandwidth_hz=20e6,
    n0_w_per_hz=dbm(-174.0),
    gamma_d=10**0.5,
    gamma_a=10**0.5,
    lambda_mt=121e-6,
)


@pytest.fixture
def params():
    return SystemParams(**REF_KW)


@pytest.fixture
def power():
    return PowerProfile(p_tx_w=dbm(43.0), p_circ_w=dbm(51.14), p_idle_w=dbm(48.75))


@pytest.fixture
def bounds():
    return OptimizationBounds(
        p_min_w=dbm(-20.0),
        p_max_w=dbm(60.0),
        lambda_min=cell_density(2000.0),
        lambda_max=cell_density(10.0),
    )


@pytest.fixture
def lam_ref():
    return cell_density(250.0)


# Acceptance criteria append (number, title, passed, detail) here; the lines
# are printed once at the end of the session.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_LINES):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {title} | {detail}")
