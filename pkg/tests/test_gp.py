import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dknbo import gp
from dknbo.errors import TrainingFailed
from dknbo.kernels import KINDS, MATERN32, SQUARED_EXPONENTIAL, KernelHyperparams, kernel_matrix
from dknbo.selftest import gp_bruteforce, gp_oracle_worst, lml_gradient_error

JIT = 1e-6


def test_prior_without_data():
    h = KernelHyperparams.from_constrained(MATERN32, 1.0, 2.0, 0.1, constant_mean=0.3)
    post = gp.posterior(h, np.zeros((0, 1)), np.zeros(0), [[0.0], [4.0]])
    np.testing.assert_allclose(post.mean, 0.3)
    np.testing.assert_allclose(post.variance, 2.0)


def test_single_point_closed_form():
    h = KernelHyperparams.from_constrained(SQUARED_EXPONENTIAL, 1.0, 1.5, 0.2, constant_mean=0.5)
    post = gp.posterior(h, [[1.0]], [2.0], [[1.0]], jitter=JIT)
    denom = 1.5 + h.noise + JIT
    assert post.mean[0] == pytest.approx(0.5 + 1.5 / denom * 1.5, rel=1e-12)
    assert post.variance[0] == pytest.approx(1.5 - 1.5 ** 2 / denom, rel=1e-10)


def test_lml_single_point_closed_form():
    h = KernelHyperparams.from_constrained(MATERN32, 1.0, 1.0, 0.1)
    s2 = 1.0 + h.noise + JIT
    expected = -0.5 * np.log(s2) - 0.5 * 0.7 ** 2 / s2 - 0.5 * np.log(2 * np.pi)
    assert gp.log_marginal_likelihood(h, [[0.0]], [0.7], JIT) == pytest.approx(expected, rel=1e-12)


def test_posterior_matches_bruteforce_oracle():
    assert gp_oracle_worst(50, seed=3) < 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_interpolates_well_separated_points(kind):
    h = KernelHyperparams.from_constrained(kind, 0.5, 1.0, 1e-3, constant_mean=0.4)
    X = np.array([[-3.0], [0.0], [3.0]])
    y = np.array([1.0, -1.0, 2.0])
    post = gp.posterior(h, X, y, X, JIT)
    assert np.max(np.abs(post.mean - y)) <= np.sqrt(h.noise + JIT) * np.max(np.abs(y - 0.4)) * 2
    assert np.all(post.variance <= h.noise + JIT + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(KINDS), st.integers(0, 2 ** 32 - 1), st.integers(1, 12))
def test_more_data_never_increases_variance(kind, seed, n):
    rng = np.random.default_rng(seed)
    h = KernelHyperparams(kind, *rng.normal(size=3) * 0.5)
    X = rng.uniform(-3, 3, size=(n + 1, 1))
    y = rng.normal(size=n + 1)
    Xq = rng.uniform(-4, 4, size=(9, 1))
    v_small = gp.posterior(h, X[:n], y[:n], Xq, JIT).variance
    v_big = gp.posterior(h, X, y, Xq, JIT).variance
    assert np.all(v_big <= v_small + 1e-9)
    assert np.all(v_small <= h.outputscale + 1e-12) and np.all(v_big >= 0)


def test_lml_matches_bruteforce():
    rng = np.random.default_rng(1)
    h = KernelHyperparams(MATERN32, 0.2, -0.1, -1.0, 0.3)
    X = rng.normal(size=(6, 2))
    y = rng.normal(size=6)
    K = kernel_matrix(h, X, X) + (h.noise + JIT) * np.eye(6)
    r = y - 0.3
    _, ld = np.linalg.slogdet(K)
    expected = -0.5 * ld - 0.5 * r @ np.linalg.solve(K, r) - 3 * np.log(2 * np.pi)
    assert gp.log_marginal_likelihood(h, X, y, JIT) == pytest.approx(expected, rel=1e-10)
    mean_b, _, _ = gp_bruteforce(h, X, y, X[:2], JIT)
    np.testing.assert_allclose(gp.posterior(h, X, y, X[:2], JIT).mean, mean_b, rtol=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_lml_gradients_match_finite_differences(seed):
    assert lml_gradient_error(seed) < 1e-5


def test_lml_and_gradients_consistent():
    rng = np.random.default_rng(2)
    h = KernelHyperparams(SQUARED_EXPONENTIAL, 0.1, 0.2, -2.0, 0.0)
    X, y = rng.normal(size=(5, 1)), rng.normal(size=5)
    lml, gh, gx = gp.lml_and_gradients(h, X, y, JIT)
    assert lml == pytest.approx(gp.log_marginal_likelihood(h, X, y, JIT))
    gh2, gx2 = gp.lml_gradients(h, X, y, JIT)
    np.testing.assert_array_equal(gh, gh2)
    np.testing.assert_array_equal(gx, gx2)


def test_fit_recovers_lengthscale():
    rng = np.random.default_rng(0)
    truth = KernelHyperparams.from_constrained(SQUARED_EXPONENTIAL, 1.0, 1.0, 1e-2)
    X = rng.uniform(-5, 5, size=(50, 1))
    K = kernel_matrix(truth, X, X) + 1e-2 * np.eye(50)
    y = np.linalg.cholesky(K) @ rng.standard_normal(50)
    init = KernelHyperparams(SQUARED_EXPONENTIAL)
    fitted = gp.fit_hyperparameters(X, y, init, iters=200, lr=0.05)
    assert 0.5 <= fitted.lengthscale <= 2.0
    assert gp.log_marginal_likelihood(fitted, X, y) > gp.log_marginal_likelihood(init, X, y)


def test_fit_zero_iterations_returns_init():
    init = KernelHyperparams(MATERN32, 0.3)
    assert gp.fit_hyperparameters([[0.0]], [1.0], init, iters=0) is init


def test_fit_invalid_start_raises():
    init = KernelHyperparams(MATERN32)
    with pytest.raises(TrainingFailed):
        gp.fit_hyperparameters([[0.0], [np.nan]], [1.0, 2.0], init, iters=5)


def test_lml_standard_normal_at_mean():
    # outputscale + noise = 1 (jitter removed), y equal to the mean
    h = KernelHyperparams.from_constrained(MATERN32, 1.0, 0.9, 0.1, constant_mean=0.25)
    assert gp.log_marginal_likelihood(h, [[0.0]], [0.25], jitter=0.0) == pytest.approx(-0.9189385, abs=1e-7)


def test_single_point_noise_floor_example():
    h = KernelHyperparams.from_constrained(SQUARED_EXPONENTIAL, 1.0, 1.0, 1e-4)
    post = gp.posterior(h, [[0.3]], [2.0], [[0.3]], jitter=0.0)
    assert post.mean[0] == pytest.approx(2.0 / (1 + 1e-4), rel=1e-12)
    assert post.variance[0] == pytest.approx(1e-4 / (1 + 1e-4), rel=1e-6)


@pytest.mark.parametrize("kind", KINDS)
def test_interpolation_bound_at_noise_floor(kind):
    rng = np.random.default_rng(5)
    c = 0.3
    h = KernelHyperparams.from_constrained(kind, 1.0, 1.0, 1e-4, constant_mean=c)
    X = np.arange(6)[:, None] * 30.0  # far apart relative to the lengthscale
    y = rng.normal(size=6)
    post = gp.posterior(h, X, y, X)
    assert np.all(np.abs(post.mean - y) <= 2e-4 * np.abs(y - c) + 1e-6)
    assert np.all(post.variance <= h.noise + 1e-6)


@pytest.mark.parametrize("kind", KINDS)
def test_prior_variance_recovered_far_from_data(kind):
    h = KernelHyperparams.from_constrained(kind, 0.5, 1.7, 1e-2)
    X = np.linspace(-1, 1, 5)[:, None]
    post = gp.posterior(h, X, np.sin(X[:, 0]), [[1.0 + 25 * 0.5]])
    assert post.variance[0] == pytest.approx(1.7, abs=1e-6)


def test_duplicate_points_give_finite_gradients():
    h = KernelHyperparams.from_constrained(MATERN32, 1.0, 1.0, 1e-4)
    X = np.array([[0.5], [0.5], [1.0]])
    lml, gh, gx = gp.lml_and_gradients(h, X, [1.0, 1.0, 0.0])
    assert np.isfinite(lml) and np.all(np.isfinite(gh)) and np.all(np.isfinite(gx))


def test_fit_never_worse_than_init():
    rng = np.random.default_rng(8)
    X = rng.uniform(-3, 3, size=(12, 1))
    y = np.cos(X[:, 0]) + 0.1 * rng.normal(size=12)
    init = KernelHyperparams(SQUARED_EXPONENTIAL, 2.0, -1.0, 1.0, 0.0)
    fitted = gp.fit_hyperparameters(X, y, init, iters=25, lr=0.5)
    assert gp.log_marginal_likelihood(fitted, X, y) >= gp.log_marginal_likelihood(init, X, y) - 1e-9
