"""Exact GP regression: posterior, log marginal likelihood, gradients and
hyperparameter fitting by Adam ascent."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import numerics
from .errors import NotPositiveDefinite, TrainingFailed
from .kernels import kernel_grads, kernel_matrix, softplus_grad
from .nn_encoder import AdamState, adam_step

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class GpPosterior:
    mean: np.ndarray
    variance: np.ndarray

    @property
    def std(self):
        return np.sqrt(self.variance)


def _train_factor(h, X, jitter):
    K = kernel_matrix(h, X, X)
    K[np.diag_indices_from(K)] += h.noise
    return numerics.cholesky(K, jitter)


def posterior(h, X_train, y_train, X_query, jitter=numerics.DEFAULT_JITTER):
    """Predictive mean and variance of the latent function at ``X_query``.

    With no training data the prior (``constant_mean``, ``outputscale``) is
    returned.
    """
    Xq = np.asarray(X_query, dtype=np.float64)
    m = Xq.shape[0]
    y = np.asarray(y_train, dtype=np.float64).ravel()
    c = h.constant_mean
    if y.size == 0:
        return GpPosterior(np.full(m, c), np.full(m, h.outputscale))
    L = _train_factor(h, X_train, jitter)
    Ks = kernel_matrix(h, X_train, Xq)
    alpha = numerics.chol_solve(L, y - c)
    mean = c + Ks.T @ alpha
    v = solve_triangular(L, Ks, lower=True, check_finite=False)
    var = h.outputscale - np.sum(v * v, axis=0)
    var[var < -1e-10] = 0.0
    return GpPosterior(mean, np.maximum(var, 0.0))


def log_marginal_likelihood(h, X_train, y_train, jitter=numerics.DEFAULT_JITTER):
    """Gaussian log-density of ``y_train`` under the GP prior (full normalisation)."""
    y = np.asarray(y_train, dtype=np.float64).ravel()
    L = _train_factor(h, X_train, jitter)
    alpha = numerics.chol_solve(L, y - h.constant_mean)
    return float(
        -0.5 * numerics.logdet(L)
        - 0.5 * (y - h.constant_mean) @ alpha
        - 0.5 * y.size * _LOG_2PI
    )


def lml_and_gradients(h, X_train, y_train, jitter=numerics.DEFAULT_JITTER):
    """Value and gradients of the log marginal likelihood in one pass.

    Returns ``(lml, grad_hyper, grad_X)``; ``grad_hyper`` follows the
    ordering of :meth:`KernelHyperparams.to_vector`.
    """
    X = np.asarray(X_train, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y_train, dtype=np.float64).ravel()
    n = y.size
    L = _train_factor(h, X, jitter)
    resid = y - h.constant_mean
    alpha = numerics.chol_solve(L, resid)
    lml = -0.5 * numerics.logdet(L) - 0.5 * resid @ alpha - 0.5 * n * _LOG_2PI
    # dL/dK = (alpha alpha^T - K^{-1}) / 2
    W = 0.5 * (np.outer(alpha, alpha) - numerics.chol_solve(L, np.eye(n)))
    dK_dell, dK_dsf, dK_dX = kernel_grads(h, X, X)
    grad_hyper = np.array([
        np.sum(W * dK_dell),
        np.sum(W * dK_dsf),
        np.trace(W) * float(softplus_grad(h.raw_noise)),
        np.sum(alpha),
    ])
    grad_X = 2.0 * np.einsum("ij,ijk->ik", W, dK_dX)
    return float(lml), grad_hyper, grad_X


def lml_gradients(h, X_train, y_train, jitter=numerics.DEFAULT_JITTER):
    """``(d lml / d hyper, d lml / d X_train)``."""
    _, gh, gx = lml_and_gradients(h, X_train, y_train, jitter)
    return gh, gx


def fit_hyperparameters(X_train, y_train, init, iters=200, lr=0.05, seed=0,
                        jitter=numerics.DEFAULT_JITTER, max_retries=5):
    """Maximise the log marginal likelihood with full-batch Adam.

    Returns the hyperparameters with the best likelihood seen (``init`` is a
    candidate). A step landing on a non-factorisable matrix is retried from
    the previous point with a 10x smaller learning rate, up to
    ``max_retries`` times. ``seed`` is accepted for interface symmetry; the
    full-batch procedure is deterministic.
    """
    del seed
    if iters <= 0:
        return init
    x = init.to_vector()
    try:
        lml, grad, _ = lml_and_gradients(init, X_train, y_train, jitter)
    except NotPositiveDefinite as exc:
        raise TrainingFailed(f"initial hyperparameters are invalid: {exc}") from exc
    best_lml, best_x = lml, x
    state = AdamState.zeros(x.size)
    for _ in range(iters):
        step_lr = lr
        for _attempt in range(max_retries + 1):
            new_state, x_new = adam_step(state, x, -grad, step_lr)
            try:
                lml_new, grad_new, _ = lml_and_gradients(
                    init.with_vector(x_new), X_train, y_train, jitter)
            except NotPositiveDefinite:
                step_lr *= 0.1
                continue
            if not np.isfinite(lml_new):
                step_lr *= 0.1
                continue
            break
        else:
            raise TrainingFailed(
                f"step failed {max_retries + 1} times with non-positive-definite kernels")
        state, x, lml, grad = new_state, x_new, lml_new, grad_new
        if lml > best_lml:
            best_lml, best_x = lml, x
    return init.with_vector(best_x)
