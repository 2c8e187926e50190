import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from eeplan import mcsim, metrics
from eeplan.errors import DomainError, EmptyRealization, InsufficientSamples
from eeplan.netmodel import LoadModel, aux_L, pmf_cell_load

from .conftest import cell_density


def _config(n, seed=0, radius=1000.0, **kw):
    return mcsim.SimConfig(window_radius_m=radius, num_realizations=n, rng_seed=seed, **kw)


def test_config_validation():
    with pytest.raises(DomainError):
        mcsim.SimConfig(num_realizations=1)
    with pytest.raises(DomainError):
        mcsim.SimConfig(lm1_scheduling="round-robin")
    with pytest.raises(DomainError):
        mcsim.SimConfig(coverage_estimator="other")


def test_window_radius_floor_and_scaling(params, lam_ref):
    assert mcsim.window_radius(lam_ref, 1.0, params) == mcsim.WINDOW_FLOOR_M
    sparse = cell_density(1000.0)
    assert mcsim.window_radius(sparse, 1.0, params) == pytest.approx(mcsim.WINDOW_CELLS * 1000.0)


def test_realizations_are_reproducible_and_distinct():
    cfg = _config(10, seed=3)
    a = mcsim.sample_realization(1e-5, 1e-4, cfg, 4)
    b = mcsim.sample_realization(1e-5, 1e-4, cfg, 4)
    c = mcsim.sample_realization(1e-5, 1e-4, cfg, 5)
    np.testing.assert_array_equal(a.bs_xy, b.bs_xy)
    np.testing.assert_array_equal(a.mt_xy, b.mt_xy)
    assert a.bs_xy.shape != c.bs_xy.shape or not np.array_equal(a.bs_xy, c.bs_xy)


def test_point_counts_and_uniformity():
    lam, radius = 2e-5, 1000.0
    cfg = _config(400, seed=1, radius=radius)
    counts, radii = [], []
    for i in range(cfg.num_realizations):
        r = mcsim.sample_realization(lam, 0.0, cfg, i)
        counts.append(len(r.bs_xy))
        radii.append(np.hypot(*r.bs_xy.T) / radius)
    counts = np.array(counts)
    mean = lam * math.pi * radius**2
    se = math.sqrt(mean / counts.size)
    assert abs(counts.mean() - mean) < 4 * se
    assert counts.var(ddof=1) == pytest.approx(mean, rel=0.2)
    # Complete spatial randomness: squared radius is uniform on [0, 1].
    u = np.concatenate(radii) ** 2
    hist, _ = np.histogram(u, bins=10, range=(0, 1))
    expected = u.size / 10
    assert np.all(np.abs(hist - expected) < 5 * math.sqrt(expected))
    # Angular uniformity by quadrant.
    xy = np.concatenate([mcsim.sample_realization(lam, 0.0, cfg, i).bs_xy for i in range(100)])
    quad = np.bincount((xy[:, 0] > 0) * 2 + (xy[:, 1] > 0), minlength=4)
    assert np.all(np.abs(quad - quad.mean()) < 5 * math.sqrt(quad.mean()))


def test_empty_window_raises():
    cfg = mcsim.SimConfig(window_radius_m=1.0, num_realizations=2, max_resamples=3)
    with pytest.raises(EmptyRealization):
        mcsim.sample_realization(1e-9, 0.0, cfg, 0)


def test_typical_user_excluded_and_served_by_nearest(params):
    cfg = _config(5, seed=2)
    real = mcsim.sample_realization(3e-5, 3e-4, cfg, 0)
    geo = real.geometry
    assert geo.counts.sum() == len(real.mt_xy)
    assert geo.distance[geo.serving] == geo.distance.min()
    out = mcsim.evaluate_typical(real, 10.0, params, LoadModel.LM2)
    assert out.n_other == geo.counts[geo.serving]
    assert out.weight == pytest.approx(1 / (out.n_other + 1))
    assert 0.0 <= out.coverage_prob <= 1.0


def test_grid_power_without_users(params, power):
    lam = 3e-5
    cfg = _config(50, seed=4)
    vals = []
    for i in range(cfg.num_realizations):
        real = mcsim.sample_realization(lam, 0.0, cfg, i)
        for load in LoadModel:
            g = mcsim.grid_power_sample(real, 10.0, power, load)
            inner = real.geometry.inner.sum()
            assert g == pytest.approx(inner * power.p_idle_w / (math.pi * real.geometry.inner_radius**2))
        vals.append(g)
    assert np.mean(vals) == pytest.approx(lam * power.p_idle_w, rel=0.05)


@pytest.mark.filterwarnings("ignore::eeplan.errors.InsufficientSamples")
def test_campaign_seed_determinism(params, power):
    lam = cell_density(100.0)
    a = mcsim.run_campaign(lam, params, power, _config(200, seed=9), [1.0])
    b = mcsim.run_campaign(lam, params, power, _config(200, seed=9), [1.0])
    c = mcsim.run_campaign(lam, params, power, _config(200, seed=10), [1.0])
    assert a == b
    assert a != c


def test_activity_fraction_matches_aux_L(params):
    lam = cell_density(250.0)  # ratio 23.8
    cfg = _config(200, seed=5, radius=3000.0)
    samples = mcsim.collect_samples(lam, params, cfg, 3000.0)
    assert abs(np.mean(samples.activity_fraction) - aux_L(params.lambda_mt / lam)) <= 0.02


@pytest.mark.parametrize("ratio", [1.0, 5.0])
def test_cell_load_distribution(params, ratio):
    lam = params.lambda_mt / ratio
    radius = 12 / math.sqrt(math.pi * lam)
    cfg = _config(10_000, seed=6, radius=radius)
    samples = mcsim.collect_samples(lam, params, cfg, radius)
    u = np.arange(11)
    empirical = np.array([np.mean(samples.crofton_load == k) for k in u])
    assert np.max(np.abs(empirical - pmf_cell_load(u, ratio))) <= 0.02


def test_full_load_coverage_without_snr_threshold(params, power):
    no_snr = replace(params, gamma_a=0.0, lambda_mt=1e-3)
    lam = cell_density(100.0)  # about 31 users per BS: every BS transmits
    est = mcsim.estimate_metrics(1.0, lam, no_snr, power, LoadModel.LM1, _config(2000, seed=7))
    closed = metrics.coverage_probability(1.0, lam, no_snr)
    assert est.coverage.contains(closed)


def test_zero_power_means_no_coverage(params, power):
    lam = cell_density(100.0)
    est = mcsim.run_campaign(lam, params, power, _config(50, seed=8), [0.0], [LoadModel.LM1])
    assert est[(0.0, LoadModel.LM1)].coverage.mean == 0.0


def test_load_models_share_pse_and_order_grid_power(params, power):
    lam = cell_density(100.0)
    res = mcsim.run_campaign(lam, params, power, _config(1000, seed=11), [1.0])
    e1, e2 = res[(1.0, LoadModel.LM1)], res[(1.0, LoadModel.LM2)]
    assert abs(e1.pse.mean - e2.pse.mean) <= e1.pse.half_width + e2.pse.half_width
    assert e2.p_grid.mean >= e1.p_grid.mean


def test_bernoulli_scheduling_agrees_with_expected(params, power):
    lam = cell_density(100.0)
    a = mcsim.estimate_metrics(1.0, lam, params, power, LoadModel.LM1, _config(3000, seed=12))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InsufficientSamples)
        b = mcsim.estimate_metrics(1.0, lam, params, power, LoadModel.LM1,
                                   _config(3000, seed=12, lm1_scheduling="bernoulli"))
    assert abs(a.pse.mean - b.pse.mean) <= a.pse.half_width + b.pse.half_width
    assert b.pse.half_width > a.pse.half_width


def test_indicator_estimator_agrees_with_conditional(params, power):
    lam = cell_density(100.0)
    a = mcsim.estimate_metrics(1.0, lam, params, power, LoadModel.LM2, _config(3000, seed=13))
    b = mcsim.estimate_metrics(1.0, lam, params, power, LoadModel.LM2,
                               _config(3000, seed=13, coverage_estimator="indicator"))
    assert abs(a.coverage.mean - b.coverage.mean) <= a.coverage.half_width + b.coverage.half_width


def test_half_width_shrinks_as_inverse_sqrt_n(params, power):
    lam = cell_density(100.0)
    widths = []
    for n in (1000, 4000, 16000):
        est = mcsim.estimate_metrics(1.0, lam, params, power, LoadModel.LM2,
                                     _config(n, seed=14, radius=600.0))
        widths.append(est.pse.half_width)
    for a, b in zip(widths, widths[1:]):
        assert a / b == pytest.approx(2.0, rel=0.2)


def test_sparse_users_grid_power_is_idle_power(params, power):
    lam = cell_density(100.0)
    sparse = replace(params, lambda_mt=1e-12)
    res = mcsim.run_campaign(lam, sparse, power, _config(300, seed=15), [1.0])
    for load in LoadModel:
        assert res[(1.0, load)].p_grid.mean == pytest.approx(lam * power.p_idle_w, rel=0.05)


def test_few_samples_warn(params, power):
    lam = cell_density(100.0)
    with pytest.warns(InsufficientSamples):
        mcsim.estimate_metrics(1.0, lam, params, power, LoadModel.LM1,
                               _config(5, seed=16, lm1_scheduling="bernoulli"))
