"""Deep kernel network: a base kernel evaluated on learned encoder features,
meta-trained across source tasks and conditioned on target data at
prediction time."""

from dataclasses import dataclass, field, replace

import numpy as np

from . import gp, numerics
from .errors import DegenerateScale, NotPositiveDefinite, TrainingFailed
from .kernels import MATERN32, KernelHyperparams, kernel_matrix
from .nn_encoder import (
    DEFAULT_LAYER_SIZES, AdamState, MlpParameters, adam_step, backward,
    forward, init_params, sgd_step,
)

DEFAULT_SCHEDULE = ((2000, 1e-3, 1e-2), (10000, 1e-4, 1e-3))


@dataclass
class DknParameters:
    """Encoder weights and base-kernel hyperparameters.

    Inputs are mapped through the fixed affine transform
    ``(r - input_offset) * input_scale`` before entering the encoder.
    """

    encoder: MlpParameters
    base: KernelHyperparams
    input_offset: float = 0.0
    input_scale: float = 1.0

    @property
    def latent_dim(self):
        return self.encoder.layer_sizes[-1]

    def copy(self):
        return DknParameters(self.encoder.copy(), self.base, self.input_offset, self.input_scale)

    def with_parts(self, encoder, base):
        return DknParameters(encoder, base, self.input_offset, self.input_scale)

    def prepare(self, R):
        R = np.asarray(R, dtype=np.float64)
        if R.ndim == 1:
            R = R[:, None]
        return (R - self.input_offset) * self.input_scale

    def encode(self, R):
        return forward(self.encoder, self.prepare(R))[0]


@dataclass
class MetaTrainConfig:
    """Meta-training schedule.

    ``lr_schedule`` is a sequence of ``(until_iteration, lr_encoder, lr_kernel)``
    segments; iteration ``i`` uses the first segment with ``i < until``.
    """

    iterations: int = 10000
    batch_size: int = 8
    lr_schedule: tuple = DEFAULT_SCHEDULE
    checkpoint_every: int = 100
    seed: int = 0
    optimizer: str = "adam"
    rescale_labels: bool = True
    layer_sizes: tuple = DEFAULT_LAYER_SIZES
    kernel: str = MATERN32
    init_base: KernelHyperparams = None
    input_bounds: tuple = None  # (lo, hi) mapped onto [-1, 1]; None keeps raw inputs
    max_skip_fraction: float = 0.01

    def __post_init__(self):
        self.lr_schedule = tuple(tuple(seg) for seg in self.lr_schedule)
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.iterations < 0 or self.checkpoint_every < 1:
            raise ValueError("iterations must be >= 0 and checkpoint_every >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not self.lr_schedule or self.lr_schedule[-1][0] < self.iterations:
            raise ValueError("lr_schedule must cover every training iteration")
        if any(b_w <= 0 or b_g <= 0 for _, b_w, b_g in self.lr_schedule):
            raise ValueError("learning rates must be positive")

    def rates(self, iteration):
        for until, b_w, b_g in self.lr_schedule:
            if iteration < until:
                return b_w, b_g
        return self.lr_schedule[-1][1:]


@dataclass(frozen=True)
class LabelScaler:
    """Affine map sending ``[j_min, j_max]`` onto ``[0, 1]``."""

    j_min: float = 0.0
    j_max: float = 1.0

    def __post_init__(self):
        if not self.j_max - self.j_min >= 1e-12:
            raise DegenerateScale(f"label range [{self.j_min}, {self.j_max}] is degenerate")

    @classmethod
    def from_labels(cls, labels):
        labels = np.asarray(labels, dtype=np.float64)
        return cls(float(labels.min()), float(labels.max()))

    @property
    def span(self):
        return self.j_max - self.j_min

    def rescale(self, j):
        return (np.asarray(j, dtype=np.float64) - self.j_min) / self.span

    def unscale(self, mean, variance):
        mean = np.asarray(mean, dtype=np.float64)
        return mean * self.span + self.j_min, np.asarray(variance) * self.span ** 2


def rescale(s, j):
    return s.rescale(j)


def unscale(s, mean, variance):
    return s.unscale(mean, variance)


@dataclass
class TrainingTrace:
    losses: list = field(default_factory=list)  # NaN where the batch was skipped
    checkpoints: list = field(default_factory=list)  # (iteration, mean task lml)
    skipped: int = 0
    best_iteration: int = 0
    initial_lml: float = float("nan")
    best_lml: float = float("nan")


def init_dkn(layer_sizes=DEFAULT_LAYER_SIZES, kernel=MATERN32, seed=0, base=None,
             input_bounds=None):
    base = KernelHyperparams(kind=kernel) if base is None else replace(base, kind=kernel)
    offset, scale = 0.0, 1.0
    if input_bounds is not None:
        lo, hi = (float(b) for b in input_bounds)
        offset, scale = 0.5 * (lo + hi), 2.0 / (hi - lo)
    return DknParameters(init_params(layer_sizes, seed), base, offset, scale)


def deep_kernel_matrix(p, R, R2):
    """Base kernel on encoded inputs. Returns ``(K, (cache_R, cache_R2))``."""
    Z, cache = forward(p.encoder, p.prepare(R))
    Z2, cache2 = forward(p.encoder, p.prepare(R2))
    return kernel_matrix(p.base, Z, Z2), (cache, cache2)


def dkn_loss_and_grads(p, r_batch, j_batch, jitter=numerics.DEFAULT_JITTER):
    """Negative log marginal likelihood of one task batch and its gradients.

    Returns ``(loss, grad_encoder, grad_base)``; ``grad_base`` follows
    :meth:`KernelHyperparams.to_vector` ordering. Labels are used as given
    (rescale beforehand).
    """
    Z, cache = forward(p.encoder, p.prepare(r_batch))
    lml, g_hyper, g_Z = gp.lml_and_gradients(p.base, Z, j_batch, jitter)
    g_enc, _ = backward(p.encoder, cache, -g_Z)
    return -lml, g_enc, -g_hyper


def mean_task_lml(p, tasks, scaler, jitter=numerics.DEFAULT_JITTER):
    """Average over tasks of the full-task log marginal likelihood."""
    total = 0.0
    for task in tasks:
        Z = p.encode(task.r)
        total += gp.log_marginal_likelihood(p.base, Z, scaler.rescale(task.J), jitter)
    return total / len(tasks)


def _safe_mean_lml(p, tasks, scaler):
    try:
        value = mean_task_lml(p, tasks, scaler)
    except NotPositiveDefinite:
        return -np.inf
    return value if np.isfinite(value) else -np.inf


def meta_train(source, cfg, init=None, log=None):
    """Fit encoder weights and base-kernel hyperparameters on source tasks.

    Each iteration draws one task uniformly and a batch without replacement
    from it, then takes one optimiser step per parameter group. Every
    ``cfg.checkpoint_every`` iterations the mean full-task likelihood is
    evaluated and the best parameters so far are retained.

    Returns ``(best_params, scaler, trace)``.
    """
    source = list(source)
    if not source:
        raise ValueError("meta_train needs at least one source task")
    for task in source:
        if len(task) < cfg.batch_size:
            raise ValueError(
                f"task {task.task_id!r} has {len(task)} points, fewer than the batch size")
    all_labels = np.concatenate([t.J for t in source])
    scaler = LabelScaler.from_labels(all_labels) if cfg.rescale_labels else LabelScaler()
    scaled = [t.J if not cfg.rescale_labels else scaler.rescale(t.J) for t in source]

    init_seq, sample_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    if init is None:
        init = init_dkn(cfg.layer_sizes, cfg.kernel, seed=init_seq, base=cfg.init_base,
                        input_bounds=cfg.input_bounds)
    rng = np.random.default_rng(sample_seq)

    enc, base_vec = init.encoder.copy(), init.base.to_vector()
    kind_template = init.base
    adam_w = AdamState.zeros(enc.size)
    adam_g = AdamState.zeros(base_vec.size)

    trace = TrainingTrace()
    best = init.copy()
    best_lml = _safe_mean_lml(init, source, scaler)
    trace.initial_lml = trace.best_lml = best_lml
    trace.checkpoints.append((0, best_lml))
    max_skips = int(np.floor(cfg.max_skip_fraction * cfg.iterations))

    for it in range(cfg.iterations):
        k = int(rng.integers(len(source)))
        idx = rng.choice(len(source[k]), size=cfg.batch_size, replace=False)
        current = init.with_parts(enc, kind_template.with_vector(base_vec))
        try:
            loss, g_enc, g_base = dkn_loss_and_grads(current, source[k].r[idx], scaled[k][idx])
        except NotPositiveDefinite:
            loss = np.nan
        if not np.isfinite(loss):
            trace.skipped += 1
            trace.losses.append(float("nan"))
            if trace.skipped > max_skips:
                raise TrainingFailed(
                    f"{trace.skipped} of {it + 1} batches had non-positive-definite kernels")
        else:
            trace.losses.append(float(loss))
            lr_w, lr_g = cfg.rates(it)
            if cfg.optimizer == "adam":
                adam_w, enc = adam_step(adam_w, enc, g_enc, lr_w)
                adam_g, base_vec = adam_step(adam_g, base_vec, g_base, lr_g)
            else:
                enc = sgd_step(enc, g_enc, lr_w)
                base_vec = sgd_step(base_vec, g_base, lr_g)

        done = it + 1
        if done % cfg.checkpoint_every == 0 or done == cfg.iterations:
            candidate = init.with_parts(enc.copy(), kind_template.with_vector(base_vec))
            score = _safe_mean_lml(candidate, source, scaler)
            trace.checkpoints.append((done, score))
            if log is not None:
                log(f"iteration {done}: mean task lml {score:.4f}")
            if score > best_lml:
                best, best_lml = candidate, score
                trace.best_iteration, trace.best_lml = done, score
    return best, scaler, trace


def predict(p, s, target, queries, jitter=numerics.DEFAULT_JITTER):
    """Posterior over ``queries`` conditioned on the target data.

    Encoder and base kernel are held fixed; labels go through the scaler and
    the result is mapped back to the original label units.
    """
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim == 1:
        queries = queries[:, None]
    Zq = p.encode(queries)
    if len(target):
        Z = p.encode(target.r)
        y = s.rescale(target.J)
    else:
        Z, y = np.zeros((0, Zq.shape[1])), np.zeros(0)
    post = gp.posterior(p.base, Z, y, Zq, jitter)
    mean, var = s.unscale(post.mean, post.variance)
    return gp.GpPosterior(mean, var)
