"""Fully connected ReLU encoder with hand-written backprop and Adam.

Weights are stored as ``(fan_out, fan_in)`` matrices so a batch ``A`` of
row vectors maps to ``A @ W.T + b``. Hidden layers use ReLU; the last layer
is affine.

The flat parameter ordering used by :func:`flatten` / :func:`unflatten` (and
therefore by the checkpoint format) is layer-major, weights before biases,
each weight matrix in row-major order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidArchitecture, NonFiniteGradient

DEFAULT_LAYER_SIZES = (1, 100, 100, 100, 100, 10)


@dataclass
class MlpParameters:
    weights: list
    biases: list

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def size(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self):
        return MlpParameters(
            [w.copy() for w in self.weights], [b.copy() for b in self.biases]
        )


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre: list  # pre-activations per layer
    post: list  # post[i] is the input to layer i (post[0] == inputs)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n, **kw):
        return cls(np.zeros(n), np.zeros(n), **kw)


def _check_sizes(layer_sizes):
    sizes = list(layer_sizes)
    if len(sizes) < 2 or any(int(s) != s or s < 1 for s in sizes):
        raise InvalidArchitecture(f"invalid layer sizes {sizes!r}")
    return [int(s) for s in sizes]


def init_params(layer_sizes, seed=0):
    """Glorot-uniform weights and zero biases, deterministic in ``seed``."""
    sizes = _check_sizes(layer_sizes)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParameters(weights, biases)


def forward(p, r_batch):
    """Encode a batch of inputs. Returns ``(latent, cache)``."""
    a = np.asarray(r_batch, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] != p.weights[0].shape[1]:
        raise DimensionMismatch(
            f"expected a nonempty (B, {p.weights[0].shape[1]}) batch, got {a.shape}"
        )
    pre, post = [], [a]
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = a @ w.T + b
        pre.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        if i != last:
            post.append(a)
    return a, ForwardCache(post[0], pre, post)


def backward(p, cache, upstream_grad):
    """Reverse-mode gradients of ``sum(upstream_grad * latent)``.

    Returns ``(grads, input_grads)`` where ``grads`` is shaped like ``p``.
    """
    g = np.asarray(upstream_grad, dtype=np.float64)
    if g.shape != cache.pre[-1].shape:
        raise DimensionMismatch(
            f"upstream gradient {g.shape} does not match latent {cache.pre[-1].shape}"
        )
    n = len(p.weights)
    gw, gb = [None] * n, [None] * n
    for i in range(n - 1, -1, -1):
        if i != n - 1:
            g = g * (cache.pre[i] > 0.0)
        gw[i] = g.T @ cache.post[i]
        gb[i] = g.sum(axis=0)
        g = g @ p.weights[i]
    return MlpParameters(gw, gb), g


def flatten(p):
    parts = []
    for w, b in zip(p.weights, p.biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts)


def unflatten(vec, layer_sizes):
    sizes = _check_sizes(layer_sizes)
    vec = np.asarray(vec, dtype=np.float64)
    weights, biases, k = [], [], 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(vec[k:k + fan_in * fan_out].reshape(fan_out, fan_in).copy())
        k += fan_in * fan_out
        biases.append(vec[k:k + fan_out].copy())
        k += fan_out
    if k != vec.size:
        raise DimensionMismatch(f"vector of length {vec.size} does not fit {sizes}")
    return MlpParameters(weights, biases)


def adam_step(state, params, grads, lr):
    """One bias-corrected Adam descent step.

    ``params`` and ``grads`` are either flat arrays or :class:`MlpParameters`;
    the result has the same type as ``params``. ``grads`` is the gradient of
    the loss being minimised.
    """
    structured = isinstance(params, MlpParameters)
    x = flatten(params) if structured else np.asarray(params, dtype=np.float64)
    g = flatten(grads) if isinstance(grads, MlpParameters) else np.asarray(grads, dtype=np.float64)
    if g.shape != x.shape or state.m.shape != x.shape:
        raise DimensionMismatch("Adam state, parameters and gradients differ in size")
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient("gradient contains NaN or Inf")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    x_new = x - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(m, v, t, state.beta1, state.beta2, state.eps)
    if structured:
        return new_state, unflatten(x_new, params.layer_sizes)
    return new_state, x_new


def sgd_step(params, grads, lr):
    """Plain gradient descent, same conventions as :func:`adam_step`."""
    structured = isinstance(params, MlpParameters)
    x = flatten(params) if structured else np.asarray(params, dtype=np.float64)
    g = flatten(grads) if isinstance(grads, MlpParameters) else np.asarray(grads, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient("gradient contains NaN or Inf")
    x_new = x - lr * g
    return unflatten(x_new, params.layer_sizes) if structured else x_new
