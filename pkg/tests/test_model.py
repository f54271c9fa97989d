import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tnle.errors import NumericalError
from tnle.model import (
    CoefficientBank,
    CoefficientSet,
    GdConfig,
    TrainingSample,
    gd_train,
    gradient,
    loss,
    normal_eq_solve,
    pilot_estimate,
    predict,
    select_coefficients,
)


def dataset(rng, m=20, n=8, theta=None, noise=0.0):
    x = rng.uniform(50.0, 150.0, size=(m, n))
    if theta is None:
        theta = np.concatenate([[rng.uniform(20, 40)], rng.uniform(0.0, 1.0, size=n)])
    y = theta[0] + x @ theta[1:] + noise * rng.normal(size=m)
    return [TrainingSample(xi, yi) for xi, yi in zip(x, y)], np.asarray(theta)


def fd_gradient(theta, data):
    th = np.asarray(theta, dtype=float)
    out = np.zeros_like(th)
    for j in range(th.size):
        h = 1e-6 * max(1.0, abs(th[j]))
        up, dn = th.copy(), th.copy()
        up[j] += h
        dn[j] -= h
        out[j] = (loss(up, data) - loss(dn, data)) / (2 * h)
    return out


def test_predict_examples():
    assert predict(CoefficientSet([7.0, 0.0, 0.0]), [3.0, 9.0]) == 7.0
    assert predict(CoefficientSet([1.0, 0.5]), [2.0]) == 2.0
    with pytest.raises(ValueError):
        predict(CoefficientSet([1.0, 0.5]), [2.0, 3.0])


@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3),
       st.lists(st.floats(-10, 10), min_size=3, max_size=3),
       st.lists(st.floats(0, 100), min_size=2, max_size=2))
def test_predict_linear_in_theta(t1, t2, lam):
    a, b = CoefficientSet(t1), CoefficientSet(t2)
    both = CoefficientSet(np.add(t1, t2))
    assert predict(both, lam) == pytest.approx(predict(a, lam) + predict(b, lam), abs=1e-9)


def test_loss_examples():
    data = [TrainingSample([1.0, 2.0], 5.0), TrainingSample([0.0, 1.0], 2.0)]
    exact = CoefficientSet([0.0, 1.0, 2.0])
    assert loss(exact, data) == 0.0
    assert np.array_equal(gradient(exact, data), np.zeros(3))
    one = [TrainingSample([3.0], 4.0)]
    # prediction 6, residual 2 -> J = 1/2 * 4
    assert loss(CoefficientSet([0.0, 2.0]), one) == 2.0
    assert np.allclose(gradient(CoefficientSet([0.0, 2.0]), one), [2.0, 6.0])
    assert loss(CoefficientSet([1.0, 0.3, 0.1]), data * 2) == loss(CoefficientSet([1.0, 0.3, 0.1]), data)
    with pytest.raises(ValueError):
        loss(exact, [])
    with pytest.raises(ValueError):
        gradient(exact, [])


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(20):
        data, _ = dataset(rng, noise=5.0)
        theta = rng.normal(size=9)
        g = gradient(theta, data)
        assert np.linalg.norm(fd_gradient(theta, data) - g) <= 1e-6 * np.linalg.norm(g)


def test_gd_recovers_planted_solution():
    rng = np.random.default_rng(1)
    data, theta = dataset(rng)
    got = gd_train(data, GdConfig())
    assert np.max(np.abs(got.theta - theta)) <= 1e-6


def test_gd_intercept_only_converges_to_mean():
    data = [TrainingSample(np.zeros(3), t) for t in (80.0, 100.0, 120.0, 95.0)]
    got = gd_train(data)
    assert got.theta[0] == pytest.approx(98.75, abs=1e-8)
    assert not got.theta[1:].any()


def test_gd_agrees_with_normal_equations():
    rng = np.random.default_rng(2)
    for _ in range(10):
        data, _ = dataset(rng, noise=3.0)
        gd = gd_train(data)
        ne = normal_eq_solve(data)
        assert np.max(np.abs(gd.theta - ne.theta) / np.abs(ne.theta)) <= 1e-3
        assert loss(gd, data) <= 1.0001 * loss(ne, data)


def test_gd_raw_mode_on_small_scale_problem():
    data = [TrainingSample([x], 1.0 + 2.0 * x) for x in (0.0, 0.5, 1.0, 1.5)]
    got = gd_train(data, GdConfig(alpha=0.2, normalize=False))
    assert np.allclose(got.theta, [1.0, 2.0], atol=1e-7)


def test_gd_loss_is_non_increasing():
    rng = np.random.default_rng(3)
    data, _ = dataset(rng, noise=2.0)
    losses = [loss(gd_train(data, GdConfig(max_iters=k)), data) for k in range(0, 60, 3)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(losses, losses[1:]))


def test_gd_divergence_is_reported():
    rng = np.random.default_rng(4)
    data, _ = dataset(rng, noise=1.0)
    with pytest.raises(NumericalError, match="gd divergence"):
        gd_train(data, GdConfig(alpha=5.0))


def test_gd_warns_on_too_few_samples():
    data = [TrainingSample([1.0, 2.0, 3.0], 4.0), TrainingSample([2.0, 1.0, 0.0], 3.0)]
    with pytest.warns(UserWarning, match="training samples"):
        gd_train(data, GdConfig(max_iters=10))


def test_normal_equations():
    rng = np.random.default_rng(5)
    data, theta = dataset(rng)
    assert np.max(np.abs(normal_eq_solve(data).theta - theta)) <= 1e-10 * np.abs(theta).max()
    line = [TrainingSample([0.0], 4.0), TrainingSample([1.0], 6.0)]
    assert np.allclose(normal_eq_solve(line).theta, [4.0, 2.0], atol=1e-12)
    dup = [TrainingSample([v, v], 2 * v + 1) for v in (1.0, 2.0, 3.0, 5.0)]
    with pytest.raises(NumericalError, match="rank deficient"):
        normal_eq_solve(dup)


def test_pilot_estimate():
    assert pilot_estimate([3.0] * 8) == 3.0
    assert pilot_estimate([1, 2, 3, 4, 5, 6, 7, 8]) == 4.5
    with pytest.raises(ValueError):
        pilot_estimate([])


def bank_of(*refs, pooled=None):
    return CoefficientBank(7, 1, tuple(CoefficientSet([r * r, 0.0], r) for r in refs), pooled)


def test_select_coefficients():
    bank = bank_of(5.0, 10.0, 15.0)
    assert select_coefficients(bank, 98.0).sigma_ref == 10.0
    assert select_coefficients(bank, 62.5).sigma_ref == 5.0
    assert select_coefficients(bank, 1e6).sigma_ref == 15.0
    assert select_coefficients(bank_of(20.0), 1.0).sigma_ref == 20.0
    assert select_coefficients(bank, 98.0) is select_coefficients(bank, 98.0)


def test_select_pooled():
    pooled = CoefficientSet([1.0, 1.0])
    assert select_coefficients(bank_of(5.0, pooled=pooled), 25.0, mode="pooled") is pooled
    with pytest.raises(ValueError):
        select_coefficients(bank_of(5.0), 25.0, mode="pooled")


def test_select_empty_bank():
    with pytest.raises(ValueError):
        select_coefficients(CoefficientBank(7, 1, ()), 10.0)


def test_bank_invariants():
    bank = bank_of(10.0, 5.0)
    assert [e.sigma_ref for e in bank.entries] == [5.0, 10.0]
    with pytest.raises(ValueError):
        bank_of(5.0, 5.0)
    with pytest.raises(ValueError):
        CoefficientBank(7, 2, (CoefficientSet([1.0, 0.0], 5.0),))


def test_training_sample_target_is_variance():
    s = TrainingSample.from_sigma([1.0, 2.0], 10.0)
    assert s.target == 100.0 and s.sigma_label == 10.0
    with pytest.raises(ValueError):
        TrainingSample([1.0], -1.0)
