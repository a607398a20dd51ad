"""Acquisition functions and the two BO loops (meta-learned deep kernel and
classical GP). Everything maximises."""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import dkn, gp
from .errors import EmptyCandidates, EvaluationFailed
from .kernels import SQUARED_EXPONENTIAL, KernelHyperparams

EI, UCB = "ei", "ucb"
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass
class AcquisitionConfig:
    kind: str = EI
    xi: float = 0.01
    beta: float = 4.0
    candidate_count: int = 512
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (EI, UCB):
            raise ValueError(f"unknown acquisition {self.kind!r}")
        if self.candidate_count < 2:
            raise ValueError("candidate_count must be at least 2")


@dataclass
class GpFitConfig:
    """Refit schedule for the classical baseline.

    Every fit restarts from ``init``. With ``standardize`` the labels are
    shifted and scaled to unit variance before fitting.
    """

    iters: int = 200
    lr: float = 0.05
    init: KernelHyperparams = field(
        default_factory=lambda: KernelHyperparams(kind=SQUARED_EXPONENTIAL))
    standardize: bool = False


@dataclass
class BoRecord:
    iteration: int
    r: np.ndarray
    J: float
    best_J: float
    regret: float = float("nan")


@dataclass
class BoHistory:
    records: list = field(default_factory=list)
    best_r: np.ndarray = None
    j_star: float = None

    def __len__(self):
        return len(self.records)

    @property
    def regrets(self):
        return np.array([rec.regret for rec in self.records])

    @property
    def best_values(self):
        return np.array([rec.best_J for rec in self.records])

    @property
    def proposals(self):
        return np.array([rec.r for rec in self.records])


def expected_improvement(mean, std, best_so_far, xi=0.01):
    """Closed-form EI for maximisation; reduces to ``max(mean-best-xi, 0)``
    where ``std`` is zero."""
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    imp = mean - best_so_far - xi
    pos = std > 0
    safe = np.where(pos, std, 1.0)
    with np.errstate(over="ignore"):
        z = imp / safe
        ei = imp * ndtr(z) + safe * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    out = np.where(pos, ei, np.maximum(imp, 0.0))
    return np.maximum(out, 0.0)


def ucb(mean, std, beta=4.0):
    return np.asarray(mean, dtype=np.float64) + np.sqrt(beta) * np.asarray(std, dtype=np.float64)


def acquisition_values(posterior, acq, best_so_far):
    if acq.kind == EI:
        return expected_improvement(posterior.mean, posterior.std, best_so_far, acq.xi)
    return ucb(posterior.mean, posterior.std, acq.beta)


def propose_next(posterior, candidates, acq, best_so_far):
    """Candidate with the largest acquisition value (lowest index on ties)."""
    candidates = np.asarray(candidates, dtype=np.float64)
    if candidates.ndim == 1:
        candidates = candidates[:, None]
    if candidates.shape[0] == 0:
        raise EmptyCandidates("no candidates to choose from")
    values = acquisition_values(posterior, acq, best_so_far)
    return candidates[int(np.argmax(values))].copy()


def _bounds(r_bounds, n_r):
    lo, hi = (np.asarray(b, dtype=np.float64) for b in r_bounds)
    return np.broadcast_to(lo, (n_r,)).copy(), np.broadcast_to(hi, (n_r,)).copy()


def _loop(surrogate, evaluator, init_target, budget, acq, r_bounds, j_star):
    lo, hi = _bounds(r_bounds, init_target.n_r)
    rng = np.random.default_rng(acq.seed)
    data = init_target
    history = BoHistory(j_star=j_star)
    best = float(np.max(data.J)) if len(data) else -np.inf
    best_r = data.r[int(np.argmax(data.J))].copy() if len(data) else None
    for it in range(1, budget + 1):
        cands = rng.uniform(lo, hi, size=(acq.candidate_count, lo.size))
        post = surrogate(data, cands)
        r_next = propose_next(post, cands, acq, best if np.isfinite(best) else 0.0)
        try:
            J = float(evaluator(r_next))
        except Exception as exc:
            raise EvaluationFailed(f"evaluation failed at BO iteration {it}: {exc}") from exc
        data = data.append(r_next, J)
        if J > best:
            best, best_r = J, r_next.copy()
        regret = j_star - best if j_star is not None else float("nan")
        history.records.append(BoRecord(it, r_next, J, best, regret))
    history.best_r = best_r
    return history


def run_dkn_bo(p, s, evaluator, init_target, budget, acq=None, r_bounds=((-10.0,), (10.0,)),
               j_star=None, retrain_base=False, retrain_cfg=None):
    """Few-shot BO with a meta-trained deep kernel.

    The encoder and base kernel stay fixed unless ``retrain_base`` is set, in
    which case the base-kernel hyperparameters (not the encoder) are refit on
    the target data before every proposal.
    """
    acq = AcquisitionConfig() if acq is None else acq
    retrain_cfg = GpFitConfig(init=p.base) if retrain_cfg is None else retrain_cfg

    def surrogate(data, cands):
        params = p
        if retrain_base and len(data) >= 2:
            Z = p.encode(data.r)
            base = gp.fit_hyperparameters(Z, s.rescale(data.J), p.base,
                                          retrain_cfg.iters, retrain_cfg.lr)
            params = p.with_parts(p.encoder, base)
        return dkn.predict(params, s, data, cands)

    return _loop(surrogate, evaluator, init_target, budget, acq, r_bounds, j_star)


def run_gp_bo(evaluator, init_target, budget, acq=None, gp_fit_cfg=None,
              r_bounds=((-10.0,), (10.0,)), j_star=None):
    """Classical BO: refit a GP from a fixed initialisation each iteration."""
    if len(init_target) < 2:
        raise ValueError("classical BO needs at least two initial points")
    acq = AcquisitionConfig() if acq is None else acq
    cfg = GpFitConfig() if gp_fit_cfg is None else gp_fit_cfg

    def surrogate(data, cands):
        y = data.J
        shift, scale = 0.0, 1.0
        if cfg.standardize:
            shift = float(np.mean(y))
            scale = float(np.std(y)) or 1.0
        ys = (y - shift) / scale
        h = gp.fit_hyperparameters(data.r, ys, cfg.init, cfg.iters, cfg.lr)
        post = gp.posterior(h, data.r, ys, cands)
        return gp.GpPosterior(post.mean * scale + shift, post.variance * scale ** 2)

    return _loop(surrogate, evaluator, init_target, budget, acq, r_bounds, j_star)
