import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dknbo import numerics
from dknbo.errors import DimensionMismatch, NotPositiveDefinite
from dknbo.selftest import cofactor_det


def test_cholesky_identity():
    np.testing.assert_array_equal(numerics.cholesky(np.eye(2), 0.0), np.eye(2))


def test_cholesky_2x2_by_hand():
    A = np.array([[4.0, 2.0], [2.0, 3.0]])
    L = numerics.cholesky(A, 0.0)
    np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], rtol=1e-14)
    np.testing.assert_allclose(L @ L.T, A, rtol=1e-14)


def test_cholesky_indefinite():
    with pytest.raises(NotPositiveDefinite):
        numerics.cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]), 0.0)


def test_cholesky_adds_jitter_once():
    L = numerics.cholesky(np.zeros((3, 3)), 0.25)
    np.testing.assert_allclose(L @ L.T, 0.25 * np.eye(3))


def test_chol_solve_identity_factor():
    b = np.array([[1.5, -2.0], [3.0, 0.5]])
    np.testing.assert_array_equal(numerics.chol_solve(np.eye(2), b), b)


def test_chol_solve_2x2():
    L = numerics.cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]), 0.0)
    np.testing.assert_allclose(numerics.chol_solve(L, np.array([2.0, 1.0])), [0.5, 0.0], atol=1e-15)


def test_chol_solve_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        numerics.chol_solve(np.eye(2), np.ones((3, 1)))


@pytest.mark.parametrize("A, expected", [
    (np.eye(3), 0.0),
    (np.diag([4.0, 9.0]), np.log(36.0)),
    (np.array([[4.0, 2.0], [2.0, 3.0]]), np.log(8.0)),
])
def test_logdet(A, expected):
    assert numerics.logdet(numerics.cholesky(A, 0.0)) == pytest.approx(expected, abs=1e-14)


def test_finite_diff_quadratic():
    g = numerics.finite_diff_grad(lambda x: float(x[0] ** 2), [3.0], 1e-5)
    assert g[0] == pytest.approx(6.0, abs=1e-6)


def test_finite_diff_constant():
    np.testing.assert_array_equal(numerics.finite_diff_grad(lambda x: 4.2, np.ones(5)), np.zeros(5))


def test_finite_diff_does_not_mutate_input():
    x = np.array([1.0, 2.0])
    numerics.finite_diff_grad(lambda v: float(v @ v), x)
    np.testing.assert_array_equal(x, [1.0, 2.0])


def _spd(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    return A @ A.T + 1e-3 * np.eye(n)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 32), st.sampled_from([0.0, 1e-6, 1e-3]))
def test_cholesky_reconstructs(seed, n, jitter):
    A = _spd(seed, n)
    L = numerics.cholesky(A, jitter)
    target = A + jitter * np.eye(n)
    assert np.linalg.norm(L @ L.T - target) <= 1e-10 * np.linalg.norm(target)
    assert np.all(np.diag(L) > 0)
    assert np.all(np.triu(L, 1) == 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 32))
def test_chol_solve_inverts(seed, n):
    A = _spd(seed, n)
    b = np.random.default_rng(seed + 1).normal(size=(n, 2))
    X = numerics.chol_solve(numerics.cholesky(A, 0.0), b)
    assert np.linalg.norm(A @ X - b) <= 1e-9 * np.linalg.norm(b)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_logdet_matches_cofactor_expansion(seed, n):
    A = _spd(seed, n) + np.eye(n)
    assert abs(numerics.logdet(numerics.cholesky(A, 0.0)) - np.log(cofactor_det(A))) < 1e-10
