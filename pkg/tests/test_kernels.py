import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dknbo.errors import DimensionMismatch
from dknbo.kernels import (
    KINDS, MATERN32, SQUARED_EXPONENTIAL, KernelHyperparams, inverse_softplus,
    kernel_grads, kernel_matrix, softplus, softplus_grad,
)
from dknbo.numerics import finite_diff_grad


def _h(kind, ell=1.0, sf=1.0, noise=0.1):
    return KernelHyperparams.from_constrained(kind, ell, sf, noise)


def test_matern_at_one_lengthscale():
    K = kernel_matrix(_h(MATERN32), [[0.0]], [[1.0]])
    assert K[0, 0] == pytest.approx((1 + np.sqrt(3)) * np.exp(-np.sqrt(3)), rel=1e-12)
    assert K[0, 0] == pytest.approx(0.4834, abs=1e-4)


def test_se_at_one_lengthscale():
    K = kernel_matrix(_h(SQUARED_EXPONENTIAL, 2.0, 3.0), [[0.0, 0.0]], [[2.0, 0.0]])
    assert K[0, 0] == pytest.approx(3.0 * np.exp(-0.5), rel=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_diagonal_equals_outputscale(kind):
    X = np.random.default_rng(0).normal(size=(7, 3))
    np.testing.assert_allclose(np.diag(kernel_matrix(_h(kind, sf=2.5), X, X)), 2.5, rtol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_width_mismatch(kind):
    with pytest.raises(DimensionMismatch):
        kernel_matrix(_h(kind), np.ones((2, 2)), np.ones((2, 3)))


def test_constrained_round_trip_and_floors():
    h = KernelHyperparams.from_constrained(MATERN32, 0.7, 2.0, 0.05, 1.5)
    assert h.lengthscale == pytest.approx(0.7)
    assert h.outputscale == pytest.approx(2.0)
    assert h.noise == pytest.approx(0.05)
    assert h.constant_mean == 1.5
    low = KernelHyperparams(MATERN32, -1e3, -1e3, -1e3)
    assert low.lengthscale >= 1e-4 and low.outputscale >= 1e-6 and low.noise >= 1e-4


def test_vector_round_trip():
    h = KernelHyperparams(SQUARED_EXPONENTIAL, 0.1, -0.2, 0.3, 0.4)
    np.testing.assert_array_equal(h.with_vector(h.to_vector()).to_vector(), h.to_vector())
    assert h.with_vector([1, 2, 3, 4]).kind == SQUARED_EXPONENTIAL


def test_unknown_kind():
    with pytest.raises(ValueError):
        KernelHyperparams("rbf")


def test_softplus_helpers():
    x = np.linspace(-30, 30, 61)
    np.testing.assert_allclose(inverse_softplus(softplus(x[x > -20])), x[x > -20], rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(softplus_grad(x), 1 / (1 + np.exp(-x)), rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(KINDS), st.integers(0, 2 ** 32 - 1), st.integers(1, 25),
       st.floats(0.05, 5.0), st.floats(0.1, 5.0))
def test_kernel_psd_symmetric(kind, seed, n, ell, sf):
    X = np.random.default_rng(seed).uniform(-3, 3, size=(n, 2))
    K = kernel_matrix(_h(kind, ell, sf), X, X)
    np.testing.assert_allclose(K, K.T, atol=0)
    assert np.linalg.eigvalsh(K).min() >= -1e-9 * sf * n


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(KINDS), st.floats(0.0, 10.0), st.floats(0.0, 10.0), st.floats(0.1, 3.0))
def test_kernel_monotone_in_distance(kind, d1, d2, ell):
    lo, hi = sorted((d1, d2))
    h = _h(kind, ell)
    k = kernel_matrix(h, [[0.0]], [[lo], [hi]])[0]
    assert k[0] >= k[1] - 1e-15


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(4))
def test_kernel_grads_match_finite_differences(kind, seed):
    rng = np.random.default_rng(seed)
    X, Y = rng.normal(size=(4, 2)), rng.normal(size=(3, 2))
    X[1] = Y[0]  # one zero-distance pair
    h = KernelHyperparams(kind, *rng.normal(size=3) * 0.5)
    U = rng.normal(size=(4, 3))
    dell, dsf, dX = kernel_grads(h, X, Y)

    def f_hyper(v):
        return float(np.sum(U * kernel_matrix(h.with_vector([v[0], v[1], h.raw_noise, 0.0]), X, Y)))

    fd = finite_diff_grad(f_hyper, [h.raw_lengthscale, h.raw_outputscale])
    assert np.sum(U * dell) == pytest.approx(fd[0], rel=1e-6, abs=1e-8)
    assert np.sum(U * dsf) == pytest.approx(fd[1], rel=1e-6, abs=1e-8)
    fdX = finite_diff_grad(lambda x: float(np.sum(U * kernel_matrix(h, x, Y))), X)
    np.testing.assert_allclose(np.einsum("ij,ijk->ik", U, dX), fdX, rtol=1e-5, atol=1e-7)


def test_matern_input_gradient_finite_at_zero_distance():
    _, _, dX = kernel_grads(_h(MATERN32), [[1.0]], [[1.0]])
    assert np.all(np.isfinite(dX)) and dX[0, 0, 0] == 0.0
