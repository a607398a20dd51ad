"""Stationary base kernels with analytic derivatives.

Hyperparameters are kept unconstrained ("raw") and mapped through softplus
plus a small floor, so gradient steps never produce a zero lengthscale,
outputscale or noise.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch

MATERN32 = "matern32"
SQUARED_EXPONENTIAL = "se"
KINDS = (MATERN32, SQUARED_EXPONENTIAL)

LENGTHSCALE_FLOOR = 1e-4
OUTPUTSCALE_FLOOR = 1e-6
NOISE_FLOOR = 1e-4

_SQRT3 = np.sqrt(3.0)


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_grad(x):
    # derivative of softplus is the logistic function
    return expit(x)


def inverse_softplus(y):
    # a value sitting exactly on its floor maps to a large negative raw value
    y = np.maximum(np.asarray(y, dtype=np.float64), np.finfo(np.float64).tiny)
    return y + np.log(-np.expm1(-y))


@dataclass(frozen=True)
class KernelHyperparams:
    """Base-kernel hyperparameters in unconstrained form.

    The trainable vector (see :meth:`to_vector`) is ordered
    ``[raw_lengthscale, raw_outputscale, raw_noise, constant_mean]``.
    """

    kind: str = MATERN32
    raw_lengthscale: float = 0.0
    raw_outputscale: float = 0.0
    raw_noise: float = 0.0
    constant_mean: float = 0.0
    noise_floor: float = NOISE_FLOOR

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")

    @classmethod
    def from_constrained(cls, kind=MATERN32, lengthscale=1.0, outputscale=1.0,
                         noise=0.1, constant_mean=0.0, noise_floor=NOISE_FLOOR):
        return cls(
            kind,
            float(inverse_softplus(lengthscale - LENGTHSCALE_FLOOR)),
            float(inverse_softplus(outputscale - OUTPUTSCALE_FLOOR)),
            float(inverse_softplus(noise - noise_floor)),
            float(constant_mean),
            noise_floor,
        )

    @property
    def lengthscale(self):
        return float(softplus(self.raw_lengthscale)) + LENGTHSCALE_FLOOR

    @property
    def outputscale(self):
        return float(softplus(self.raw_outputscale)) + OUTPUTSCALE_FLOOR

    @property
    def noise(self):
        return float(softplus(self.raw_noise)) + self.noise_floor

    def to_vector(self):
        return np.array(
            [self.raw_lengthscale, self.raw_outputscale, self.raw_noise, self.constant_mean]
        )

    def with_vector(self, vec):
        ell, sf, noise, mean = (float(v) for v in vec)
        return replace(self, raw_lengthscale=ell, raw_outputscale=sf,
                       raw_noise=noise, constant_mean=mean)


def _as_2d(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return X


def _diffs(X, Y):
    X, Y = _as_2d(X), _as_2d(Y)
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch(f"input widths differ: {X.shape[1]} vs {Y.shape[1]}")
    diff = X[:, None, :] - Y[None, :, :]
    return diff, np.sqrt(np.sum(diff * diff, axis=-1))


def kernel_matrix(h, X, Y):
    """Cross-covariance ``K(X, Y)`` without the noise term."""
    _, d = _diffs(X, Y)
    ell, sf = h.lengthscale, h.outputscale
    if h.kind == MATERN32:
        a = _SQRT3 * d / ell
        return sf * (1.0 + a) * np.exp(-a)
    return sf * np.exp(-0.5 * (d / ell) ** 2)


def kernel_grads(h, X, Y):
    """Derivatives of ``K(X, Y)``.

    Returns ``(dK/draw_lengthscale, dK/draw_outputscale, dK/dX)``, the last of
    shape ``(n, m, d)`` holding the derivative of each entry with respect to
    the coordinates of its ``X`` row.
    """
    diff, d = _diffs(X, Y)
    ell, sf = h.lengthscale, h.outputscale
    dell_draw = float(softplus_grad(h.raw_lengthscale))
    dsf_draw = float(softplus_grad(h.raw_outputscale))
    if h.kind == MATERN32:
        a = _SQRT3 * d / ell
        e = np.exp(-a)
        K = sf * (1.0 + a) * e
        dK_dell = sf * a * a * e / ell
        # -3 sf e^{-a} / ell^2 * (x - y); finite at zero distance
        dK_dX = (-3.0 * sf / ell ** 2) * e[:, :, None] * diff
    else:
        K = sf * np.exp(-0.5 * (d / ell) ** 2)
        dK_dell = K * d * d / ell ** 3
        dK_dX = -(K / ell ** 2)[:, :, None] * diff
    return dK_dell * dell_draw, (K / sf) * dsf_draw, dK_dX
