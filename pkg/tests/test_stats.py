import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats as sps

from tnle.stats import (
    MetricReport,
    NoiseSpec,
    awgn,
    derive_seed,
    gamma_cdf_inv,
    gamma_p,
    mae,
    mae_truth,
    rmse_spread,
    rmse_truth,
    standard_normal,
)
from tnle.tensor import Tensor3


def test_awgn_sigma_zero_is_identity():
    img = Tensor3(np.random.default_rng(0).uniform(0, 255, size=(3, 8, 9)))
    assert awgn(img, NoiseSpec(0.0, 123)) == img


def test_awgn_is_deterministic():
    img = Tensor3(np.zeros((3, 16, 16)))
    a = awgn(img, NoiseSpec(7.5, 42))
    b = awgn(img, NoiseSpec(7.5, 42))
    assert a.data.tobytes() == b.data.tobytes()
    assert awgn(img, NoiseSpec(7.5, 43)) != a


def test_awgn_moments():
    img = Tensor3(np.zeros((1, 1000, 1000)))
    e = awgn(img, NoiseSpec(10.0, 2024)).data
    assert abs(e.mean()) <= 0.05
    assert abs(e.std() - 10.0) <= 0.05


def test_awgn_no_clipping():
    img = Tensor3(np.full((3, 50, 50), 254.0))
    out = awgn(img, NoiseSpec(20.0, 1)).data
    assert out.max() > 255 and out.min() < 254


def test_standard_normal_odd_length_prefix():
    a = standard_normal(9, 7)
    b = standard_normal(9, 8)
    assert len(a) == 7 and np.array_equal(a, b[:7])


def test_noise_moment_error_shrinks_with_samples():
    # mean |sample mean| over many seeds scales like 1/sqrt(N): 9x samples -> ~1/3
    def spread(n):
        return np.mean([abs(standard_normal(s, n).mean()) for s in range(200)])

    ratio = spread(1000) / spread(9000)
    assert 2.4 <= ratio <= 3.7


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(-1.0, 0)
    with pytest.raises(ValueError):
        NoiseSpec(1.0, 2**64)


def test_derive_seed_distinct_and_stable():
    seeds = {derive_seed(5, i, k) for i in range(10) for k in range(6)}
    assert len(seeds) == 60
    assert derive_seed(5, 3, 2) == derive_seed(5, 3, 2)


def test_gamma_cdf_inv_exponential_closed_form():
    assert gamma_cdf_inv(0.5, 1.0, 2.0) == pytest.approx(2 * math.log(2), rel=1e-13)
    assert gamma_cdf_inv(0.5, 1.0, 2.0) == pytest.approx(1.38629436, abs=1e-8)
    for p in (0.01, 0.3, 0.9, 0.999):
        assert gamma_cdf_inv(p, 1.0, 3.0) == pytest.approx(-3.0 * math.log1p(-p), rel=1e-12)


@pytest.mark.parametrize("shape", [0.5, 2.0, 24.5])
def test_gamma_cdf_inv_round_trip(shape):
    for p in np.linspace(0.01, 0.99, 99):
        x = gamma_cdf_inv(p, shape, 1.0)
        assert abs(gamma_p(shape, x) - p) <= 1e-8
        # independent forward CDF
        assert abs(special.gammainc(shape, x) - p) <= 1e-10


@pytest.mark.parametrize("shape,scale", [(0.5, 1.0), (24.5, 168 * 2 / 49), (300.0, 0.1)])
def test_gamma_cdf_inv_against_scipy(shape, scale):
    for p in (1e-6, 0.05, 0.5, 0.99, 1 - 1e-6):
        assert gamma_cdf_inv(p, shape, scale) == pytest.approx(sps.gamma.ppf(p, shape, scale=scale), rel=1e-9)


def test_gamma_cdf_inv_monotone():
    xs = [gamma_cdf_inv(p, 24.5, 1.0) for p in np.linspace(0.01, 0.99, 99)]
    assert all(b > a for a, b in zip(xs, xs[1:]))


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_gamma_cdf_inv_rejects_bad_probability(p):
    with pytest.raises(ValueError):
        gamma_cdf_inv(p, 2.0, 1.0)


def test_gamma_p_matches_scipy():
    for a in (0.3, 1.0, 4.5, 24.5, 150.0):
        for x in (0.01, 0.5, 3.0, 24.0, 200.0):
            assert gamma_p(a, x) == pytest.approx(special.gammainc(a, x), abs=1e-14)


def test_metric_hand_values():
    assert rmse_spread([1, 2, 3]) == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    assert rmse_spread([1, 2, 3]) == pytest.approx(0.81649658, abs=1e-8)
    assert mae([1, 2, 3]) == pytest.approx(2 / 3, abs=1e-12)
    assert mae([0, 4]) == pytest.approx(2.0)
    assert rmse_truth([4, 6], 5) == pytest.approx(1.0)
    assert rmse_truth([5], 5) == 0.0
    assert mae_truth([4, 7], 5) == pytest.approx(1.5)


@given(st.floats(-1e3, 1e3), st.integers(1, 20))
def test_metrics_vanish_on_constant_lists(v, n):
    vals = [v] * n
    assert rmse_spread(vals) == pytest.approx(0.0, abs=1e-9)
    assert mae(vals) == pytest.approx(0.0, abs=1e-9)
    assert rmse_truth(vals, v) == 0.0


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30))
def test_rmse_spread_bounded_by_max_deviation(vals):
    arr = np.array(vals)
    assert rmse_spread(vals) <= np.max(np.abs(arr - arr.mean())) * (1 + 1e-12) + 1e-12


@pytest.mark.parametrize("fn", [rmse_spread, mae])
def test_metrics_reject_empty(fn):
    with pytest.raises(ValueError):
        fn([])
    with pytest.raises(ValueError):
        rmse_truth([], 1.0)


def test_metric_report():
    m = MetricReport.from_estimates([5.0, 5.0], 5.0)
    assert (m.rmse_spread, m.rmse_truth, m.mae, m.mae_truth, m.n_samples) == (0.0, 0.0, 0.0, 0.0, 2)
