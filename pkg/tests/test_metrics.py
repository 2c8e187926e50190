import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eeplan import metrics
from eeplan.errors import DegenerateNetwork
from eeplan.netmodel import LoadModel, PowerProfile, SystemParams, aux_L

from .conftest import REF_KW

UPS_REF = 2.6519499880223625517  # mpmath, beta = 3.5, gamma_d = 5 dB


def _manual(p, lam, load):
    """Straight arithmetic from the raw constants, kept independent of the package."""
    kappa = (4 * math.pi * 7) ** 2
    sigma = 20e6 * 10 ** (-20.4)
    eta = kappa * sigma * 10**0.5
    x = 121e-6 / lam
    L = 1 - (1 + x / 3.5) ** -3.5
    Q = 1 - math.exp(-math.pi * lam * (p / eta) ** (2 / 3.5) * (1 + UPS_REF * L))
    cov = Q / (1 + UPS_REF * L)
    pse = 20e6 * math.log2(1 + 10**0.5) * lam * L * cov
    pc, pi = 10 ** (5.114 - 3), 10 ** (4.875 - 3)
    if load is LoadModel.LM1:
        grid = lam * (p + pc) * L + lam * pi * (1 - L)
    else:
        grid = lam * p * L + 121e-6 * pc + lam * pi * (1 - L)
    return cov, pse, grid, pse / grid


@pytest.mark.parametrize("load", list(LoadModel))
@pytest.mark.parametrize("p_dbm,r_cell", [(43, 250), (23, 125), (53, 500), (0, 40)])
def test_metrics_match_manual_arithmetic(params, power, load, p_dbm, r_cell):
    p = 10 ** ((p_dbm - 30) / 10)
    lam = 1 / (math.pi * r_cell**2)
    got = metrics.evaluate(p, lam, params, power, load)
    cov, pse, grid, ee = _manual(p, lam, load)
    assert got.coverage == pytest.approx(cov, rel=1e-12)
    assert got.pse_bits_per_sec_m2 == pytest.approx(pse, rel=1e-12)
    assert got.p_grid_w_per_m2 == pytest.approx(grid, rel=1e-12)
    assert got.ee_bits_per_joule == pytest.approx(ee, rel=1e-12)


def test_reference_power_conversions(power):
    assert power.p_tx_w == pytest.approx(19.9526, rel=1e-5)
    assert power.p_circ_w == pytest.approx(130.017, rel=1e-5)
    assert power.p_idle_w == pytest.approx(74.989, rel=1e-5)


def test_coverage_limits(params, lam_ref):
    no_snr = replace(params, gamma_a=0.0)
    dense_users = replace(no_snr, lambda_mt=1e9 * lam_ref)
    assert metrics.coverage_probability(1.0, lam_ref, dense_users) == pytest.approx(1 / (1 + UPS_REF), rel=1e-12)
    assert metrics.coverage_probability(0.0, lam_ref, params) == 0.0


def test_pse_baseline():
    quarter = SystemParams(**{**REF_KW, "beta": 4.0, "gamma_d": 1.0})
    lam = 3e-6
    assert metrics.pse_baseline(lam, quarter) == pytest.approx(lam * 20e6 / (1 + math.pi / 4), rel=1e-13)
    assert metrics.pse_baseline(2 * lam, quarter) == pytest.approx(2 * metrics.pse_baseline(lam, quarter), rel=1e-15)
    zero = SystemParams(**{**REF_KW, "gamma_d": 0.0})
    assert metrics.pse_baseline(lam, zero) == 0.0


def test_pse_collapse_without_snr_threshold(params, lam_ref):
    no_snr = replace(params, gamma_a=0.0)
    L = aux_L(121e-6 / lam_ref)
    simplified = 20e6 * math.log2(1 + 10**0.5) * lam_ref * L / (1 + no_snr.upsilon * L)
    assert metrics.pse(7.0, lam_ref, no_snr) == pytest.approx(simplified, rel=1e-12)
    many = replace(no_snr, lambda_mt=1e3 * lam_ref)
    ratio = metrics.pse(7.0, lam_ref, many) / metrics.pse_baseline(lam_ref, many)
    assert abs(ratio - 1) <= 1e-3


def test_power_grid_fully_loaded(params, power, lam_ref):
    dense = replace(params, lambda_mt=1e12)
    got = metrics.power_grid(5.0, lam_ref, dense, power, LoadModel.LM1)
    assert got == pytest.approx(lam_ref * (5.0 + power.p_circ_w), rel=1e-12)


def test_power_grid_idle_network(params, power, lam_ref):
    sparse = replace(params, lambda_mt=1e-30)
    for load in LoadModel:
        got = metrics.power_grid(5.0, lam_ref, sparse, power, load)
        assert got == pytest.approx(lam_ref * power.p_idle_w, rel=1e-12)


def test_energy_efficiency_limits(params, power, lam_ref):
    for load in LoadModel:
        assert metrics.energy_efficiency(0.0, lam_ref, params, power, load) == 0.0
        assert metrics.energy_efficiency(5.0, 0.0, params, power, load) == 0.0
        far = [metrics.energy_efficiency(5.0, lam, params, power, load) for lam in (1e2, 1e4, 1e6, 1e8)]
        assert far == sorted(far, reverse=True)
        assert far[-1] < 1e-6 * metrics.energy_efficiency(5.0, lam_ref, params, power, load)
    free = PowerProfile(0.0, 0.0, 0.0)
    with pytest.raises(DegenerateNetwork):
        metrics.energy_efficiency(0.0, lam_ref, params, free, LoadModel.LM1)


def test_ee_decreases_in_power_without_snr_threshold(params, power, lam_ref):
    no_snr = replace(params, gamma_a=0.0)
    ps = np.logspace(-5, 3, 500)
    for load in LoadModel:
        ee = metrics.energy_efficiency(ps, lam_ref, no_snr, power, load)
        assert np.all(np.diff(ee) < 0)


def test_vectorized_matches_scalar(params, power):
    ps = np.array([0.1, 1.0, 10.0])
    lams = np.array([1e-6, 1e-5, 1e-4])
    for load in LoadModel:
        vec = metrics.energy_efficiency(ps[:, None], lams[None, :], params, power, load)
        for i, p in enumerate(ps):
            for j, lam in enumerate(lams):
                assert vec[i, j] == metrics.energy_efficiency(p, lam, params, power, load)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-20, 60),
    st.floats(10, 2000),
    st.floats(2.5, 6.5),
    st.floats(0, 15),
    st.floats(1, 1000),
)
def test_load_model_ordering(p_dbm, r_cell, beta, gamma_db, lmt_km2):
    params = SystemParams(**{**REF_KW, "beta": beta, "gamma_d": 10 ** (gamma_db / 10),
                             "gamma_a": 10 ** (gamma_db / 10), "lambda_mt": lmt_km2 * 1e-6})
    power = PowerProfile(10 ** ((p_dbm - 30) / 10), 130.0, 75.0)
    lam = 1 / (math.pi * r_cell**2)
    p = power.p_tx_w
    g1 = metrics.power_grid(p, lam, params, power, LoadModel.LM1)
    g2 = metrics.power_grid(p, lam, params, power, LoadModel.LM2)
    assert g2 >= g1
    e1 = metrics.energy_efficiency(p, lam, params, power, LoadModel.LM1)
    e2 = metrics.energy_efficiency(p, lam, params, power, LoadModel.LM2)
    assert e1 >= e2
