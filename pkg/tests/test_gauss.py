import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from ggmcomposite.gauss import (
    CovarianceMatrix, Dataset, NotPositiveDefiniteError, SpdPair, cross_entropy, empirical_covariance,
    kl_divergence, logdet, sample_gaussian, spd_inverse, standardize,
)

from conftest import random_spd


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        Dataset(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 1)))
    d = Dataset(np.zeros((3, 2)))
    assert d.column_names == ("x0", "x1") and d.n == 3 and d.p == 2


def test_empirical_covariance_two_points():
    s = empirical_covariance(np.array([[1.0, 0.0], [-1.0, 0.0]]))
    np.testing.assert_array_equal(s.s, [[1.0, 0.0], [0.0, 0.0]])


def test_empirical_covariance_constant_rows():
    s = empirical_covariance(np.tile([3.0, -1.0, 2.0], (6, 1)))
    np.testing.assert_array_equal(s.s, np.zeros((3, 3)))


def test_empirical_covariance_matches_naive_loop(rng):
    x = rng.standard_normal((5, 3))
    n, p = x.shape
    mean = [sum(x[r, j] for r in range(n)) / n for j in range(p)]
    oracle = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            oracle[i, j] = sum((x[r, i] - mean[i]) * (x[r, j] - mean[j]) for r in range(n)) / n
    np.testing.assert_allclose(empirical_covariance(x).s, oracle, rtol=0, atol=1e-14)


def test_empirical_covariance_rejects_nonfinite():
    with pytest.raises(ValueError):
        empirical_covariance(np.array([[1.0, np.inf], [0.0, 1.0]]))


@given(st.integers(2, 8), st.integers(2, 6), st.integers(0, 10_000))
def test_empirical_covariance_psd(n, p, seed):
    x = np.random.default_rng(seed).standard_normal((n, p)) * 10
    assert np.linalg.eigvalsh(empirical_covariance(x).s)[0] >= -1e-10


def test_cross_entropy_identity():
    p = 4
    assert cross_entropy(np.eye(p), SpdPair(np.eye(p), np.eye(p))) == pytest.approx(p / 2)


def test_cross_entropy_scalar():
    # p=1 is below the Dataset minimum but the formula is dimension-free
    assert cross_entropy(np.array([[2.0]]), SpdPair(np.array([[1.0]]), np.array([[1.0]]))) == pytest.approx(1.0)


def test_cross_entropy_monte_carlo(rng):
    p = 4
    ref = random_spd(rng, p, 5.0)
    model = SpdPair.from_sigma(random_spd(rng, p, 3.0))
    n = 10**6
    x = np.random.default_rng(7).multivariate_normal(np.zeros(p), ref, size=n)
    neg_log = -stats.multivariate_normal(np.zeros(p), model.sigma).logpdf(x) - 0.5 * p * np.log(2 * np.pi)
    se = neg_log.std() / np.sqrt(n)
    assert abs(neg_log.mean() - cross_entropy(ref, model)) <= 3 * se


def test_cross_entropy_non_pd_model():
    bad = SpdPair(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NotPositiveDefiniteError):
        cross_entropy(np.eye(2), bad)


def test_cross_entropy_gradient(rng):
    p = 3
    ref = random_spd(rng, p)
    model = SpdPair.from_sigma(random_spd(rng, p))
    h = 1e-6
    for i in range(p):
        for j in range(i, p):
            e = np.zeros((p, p))
            e[i, j] = e[j, i] = 1.0
            fd = (cross_entropy(ref, SpdPair.from_kappa(model.kappa + h * e))
                  - cross_entropy(ref, SpdPair.from_kappa(model.kappa - h * e))) / (2 * h)
            analytic = 0.5 * np.sum((ref - model.sigma) * e)
            assert fd == pytest.approx(analytic, abs=1e-5)
    # at model = ref the gradient vanishes
    at = SpdPair.from_sigma(ref)
    e = np.ones((p, p))
    fd = (cross_entropy(ref, SpdPair.from_kappa(at.kappa + h * e))
          - cross_entropy(ref, SpdPair.from_kappa(at.kappa - h * e))) / (2 * h)
    assert abs(fd) < 1e-5


def test_kl_identical_is_zero(rng):
    m = SpdPair.from_sigma(random_spd(rng, 5))
    assert kl_divergence(m, m) == pytest.approx(0.0, abs=1e-12)


def test_kl_scalar():
    one = SpdPair(np.eye(2), np.eye(2))
    two = SpdPair(np.diag([2.0, 1.0]), np.diag([0.5, 1.0]))
    assert kl_divergence(one, two) == pytest.approx(0.5 * (np.log(2) - 1 + 0.5), abs=1e-12)
    assert kl_divergence(one, two) == pytest.approx(0.09657, abs=1e-5)


def test_kl_closed_form(rng):
    p = 3
    s1, s2 = random_spd(rng, p), random_spd(rng, p)
    a, b = SpdPair.from_sigma(s1), SpdPair.from_sigma(s2)
    m = s1 @ np.linalg.inv(s2)
    oracle = 0.5 * (np.trace(m) - np.log(np.linalg.det(m)) - p)
    assert kl_divergence(a, b) == pytest.approx(oracle, rel=1e-10)
    assert kl_divergence(a, b) >= 0


@given(st.integers(2, 6), st.integers(0, 10_000))
def test_kl_nonnegative(p, seed):
    r = np.random.default_rng(seed)
    a, b = SpdPair.from_sigma(random_spd(r, p)), SpdPair.from_sigma(random_spd(r, p))
    assert kl_divergence(a, b) >= -1e-9


def test_sampler_moments():
    d = sample_gaussian(SpdPair(np.eye(2), np.eye(2)), 10**5, 3)
    assert np.max(np.abs(empirical_covariance(d).s - np.eye(2))) < 0.05


def test_sampler_correlation():
    sigma = np.array([[1.0, 0.9], [0.9, 1.0]])
    d = sample_gaussian(SpdPair.from_sigma(sigma), 10**5, 4)
    assert 0.88 <= np.corrcoef(d.values.T)[0, 1] <= 0.92


def test_sampler_deterministic():
    m = SpdPair.from_sigma(np.array([[2.0, 0.3], [0.3, 1.0]]))
    np.testing.assert_array_equal(sample_gaussian(m, 7, 11).values, sample_gaussian(m, 7, 11).values)


def test_sampler_rejects_non_pd_and_tiny_n():
    with pytest.raises(NotPositiveDefiniteError):
        sample_gaussian(np.array([[1.0, 2.0], [2.0, 1.0]]), 5, 0)
    with pytest.raises(ValueError):
        sample_gaussian(np.eye(2), 1, 0)


def test_spd_pair_check(rng):
    m = SpdPair.from_sigma(random_spd(rng, 4))
    m.check()
    with pytest.raises(ValueError):
        SpdPair(np.eye(2), 2 * np.eye(2)).check()


def test_logdet_and_inverse(rng):
    a = random_spd(rng, 5)
    assert logdet(a) == pytest.approx(np.linalg.slogdet(a)[1], rel=1e-12)
    np.testing.assert_allclose(spd_inverse(a) @ a, np.eye(5), atol=1e-10)


def test_standardize(rng):
    x = rng.standard_normal((20, 3)) * [1, 5, 0.1] + [3, -2, 7]
    z = standardize(x)
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(np.mean(z**2, axis=0), 1, atol=1e-12)
    x[:, 1] = 4.0
    assert np.all(standardize(x)[:, 1] == 0)


def test_covariance_ridged():
    c = CovarianceMatrix(np.zeros((2, 2)))
    np.testing.assert_array_equal(c.ridged(0.5), 0.5 * np.eye(2))
