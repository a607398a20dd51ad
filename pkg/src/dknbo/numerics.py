"""Dense linear algebra helpers for GP inference, plus a finite-difference
gradient used as a test oracle.

All routines work in float64 and return fresh arrays.
"""

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite

DEFAULT_JITTER = 1e-6

__all__ = ["DEFAULT_JITTER", "cholesky", "chol_solve", "logdet", "finite_diff_grad"]


def cholesky(a, jitter=DEFAULT_JITTER):
    """Lower Cholesky factor of ``a + jitter * I``.

    Raises :class:`NotPositiveDefinite` if a pivot is non-positive after the
    jitter is added, or if ``a`` contains non-finite entries.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    n = a.shape[0]
    if jitter:
        a = a + jitter * np.eye(n)
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if n and not np.all(np.diag(L) > 0):
        raise NotPositiveDefinite("non-positive pivot")
    return L


def chol_solve(L, b):
    """Solve ``(L L^T) x = b`` given the lower factor ``L``."""
    L = np.asarray(L, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != L.shape[0]:
        raise DimensionMismatch(
            f"factor is {L.shape[0]}x{L.shape[0]} but rhs has {b.shape[0]} rows"
        )
    if L.shape[0] == 0:
        return np.zeros_like(b)
    z = solve_triangular(L, b, lower=True, check_finite=False)
    return solve_triangular(L.T, z, lower=False, check_finite=False)


def logdet(L):
    """log-determinant of ``L L^T``."""
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def finite_diff_grad(f, x, h=1e-5):
    """Central-difference gradient of scalar ``f`` at ``x``."""
    x = np.array(x, dtype=np.float64, ndmin=1)
    shape = x.shape
    flat = x.ravel()
    grad = np.empty_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(flat.reshape(shape).copy())
        flat[i] = orig - h
        fm = f(flat.reshape(shape).copy())
        flat[i] = orig
        grad[i] = (fp - fm) / (2.0 * h)
    return grad.reshape(shape)
