"""End-to-end regret experiment: source data, meta-training, then paired
DKN-BO / GP-BO runs on freshly initialised target tasks."""

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import bo, dkn
from ..errors import LengthMismatch
from ..kernels import KernelHyperparams
from ..plant import R_BOUNDS, TARGET_THETA, THETA_BOUNDS, optimal_oracle
from . import io
from .generation import MIXED, generate_source_task, generate_target_init, sample_source_systems
from .seeds import derive_seed

DKN_BO, GP_BO = "dkn_bo", "gp_bo"


@dataclass
class ExperimentConfig:
    """Experiment settings; the defaults are the full-scale protocol."""

    n_source_tasks: int = 20
    t_k: int = 50
    target_theta: tuple = TARGET_THETA
    t_init: int = 5
    bo_budget: int = 50
    repeats: int = 100
    t_f: float = 10.0
    h: float = 0.01
    r_bounds: tuple = R_BOUNDS
    theta_bounds: tuple = THETA_BOUNDS
    meta: dkn.MetaTrainConfig = field(default_factory=dkn.MetaTrainConfig)
    acq: bo.AcquisitionConfig = field(default_factory=bo.AcquisitionConfig)
    gp_fit: bo.GpFitConfig = field(default_factory=bo.GpFitConfig)
    source_strategy: str = MIXED
    source_random: int = None  # random evaluations per source task; None -> max(10, t_k // 5)
    noise_std: float = 0.0
    retrain_base: bool = False
    master_seed: int = 0

    def __post_init__(self):
        for name in ("n_source_tasks", "t_k", "t_init", "bo_budget", "repeats"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        self.target_theta = tuple(float(t) for t in self.target_theta)
        self.r_bounds = tuple(float(b) for b in self.r_bounds)
        self.theta_bounds = tuple(tuple(float(x) for x in b) for b in self.theta_bounds)
        if self.r_bounds[0] > self.r_bounds[1] or any(lo > hi for lo, hi in self.theta_bounds):
            raise ValueError("bounds must be ordered (lo <= hi)")

    def to_dict(self):
        d = asdict(self)
        d["meta"] = io._meta_to_dict(self.meta)
        d["gp_fit"] = {**asdict(self.gp_fit), "init": asdict(self.gp_fit.init)}
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "meta" in d:
            d["meta"] = io.meta_config_from_dict(d["meta"])
        if "acq" in d:
            d["acq"] = bo.AcquisitionConfig(**d["acq"])
        if "gp_fit" in d:
            g = dict(d["gp_fit"])
            if "init" in g:
                g["init"] = KernelHyperparams(**g["init"])
            d["gp_fit"] = bo.GpFitConfig(**g)
        return cls(**d)


def load_config(path):
    """Read a JSON config; missing keys (at any nesting level) take defaults."""
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


@dataclass
class RegretSummary:
    median: np.ndarray
    p05: np.ndarray
    p95: np.ndarray


@dataclass
class ExperimentResult:
    summary: dict
    histories: dict
    params: dkn.DknParameters
    scaler: dkn.LabelScaler
    trace: dkn.TrainingTrace
    source: list
    j_star: float


def _nearest_rank(sorted_vals, pct):
    n = sorted_vals.shape[0]
    k = max(1, math.ceil(pct / 100.0 * n))
    return sorted_vals[k - 1]


def regret_stats(histories):
    """Per-iteration nearest-rank median and 5th/95th percentiles.

    ``histories`` holds :class:`~dknbo.bo.BoHistory` objects or plain regret
    sequences, all of equal length.
    """
    rows = [h.regrets if isinstance(h, bo.BoHistory) else np.asarray(h, dtype=np.float64)
            for h in histories]
    if not rows:
        raise ValueError("no histories to summarise")
    if len({len(r) for r in rows}) != 1:
        raise LengthMismatch("histories have different lengths")
    A = np.sort(np.vstack(rows), axis=0)
    return RegretSummary(_nearest_rank(A, 50), _nearest_rank(A, 5), _nearest_rank(A, 95))


def make_source_data(cfg, log=None):
    systems = sample_source_systems(cfg.n_source_tasks, cfg.theta_bounds,
                                    seed=derive_seed(cfg.master_seed, "source-systems"))
    tasks = []
    for k, theta in enumerate(systems):
        tasks.append(generate_source_task(
            tuple(theta), cfg.t_k, cfg.source_strategy,
            seed=derive_seed(cfg.master_seed, "source-task", k), task_id=f"source-{k:02d}",
            n_random=cfg.source_random, t_f=cfg.t_f, h=cfg.h, r_bounds=cfg.r_bounds,
            gp_fit=cfg.gp_fit))
        if log is not None:
            log(f"source task {k + 1}/{len(systems)} done")
    return tasks


def meta_config(cfg):
    """Meta-training settings with the seed derived from ``master_seed``."""
    return replace(cfg.meta, seed=derive_seed(cfg.master_seed, "meta-train"))


def train_on_source(cfg, source, log=None):
    return dkn.meta_train(source, meta_config(cfg), log=log)


def _repeat(cfg, i, params, scaler, j_star):
    init_seed = derive_seed(cfg.master_seed, "target-init", i)
    acq = replace(cfg.acq, seed=derive_seed(cfg.master_seed, "acquisition", i))
    bounds = ((cfg.r_bounds[0],), (cfg.r_bounds[1],))
    out = {}
    init, ev = generate_target_init(cfg.target_theta, cfg.t_init, init_seed, cfg.t_f, cfg.h,
                                    cfg.r_bounds, cfg.noise_std)
    out[DKN_BO] = bo.run_dkn_bo(params, scaler, ev, init, cfg.bo_budget, acq, bounds,
                                j_star=j_star, retrain_base=cfg.retrain_base)
    # the baseline gets identical initial data and plant trajectory
    init, ev = generate_target_init(cfg.target_theta, cfg.t_init, init_seed, cfg.t_f, cfg.h,
                                    cfg.r_bounds, cfg.noise_std)
    out[GP_BO] = bo.run_gp_bo(ev, init, cfg.bo_budget, acq, cfg.gp_fit, bounds, j_star=j_star)
    return out


def run_experiment(cfg, out_dir=None, source=None, trained=None, log=None):
    """Run the full pipeline and aggregate simple regret per method.

    ``source`` and ``trained`` (``(params, scaler, trace)``) can be supplied
    to skip the corresponding stages. With ``out_dir`` the source data,
    checkpoint and each repeat's histories are written as they are produced,
    followed by ``summary.csv``.
    """
    out = None if out_dir is None else Path(out_dir)
    if source is None:
        source = make_source_data(cfg, log)
    if out is not None:
        io.write_datasets(out / "source.jsonl", source)
    if trained is None:
        trained = train_on_source(cfg, source, log)
    params, scaler, trace = trained
    if out is not None:
        io.save_checkpoint(out / "checkpoint.json", params, scaler, meta_config(cfg), trace)

    j_star = optimal_oracle(cfg.target_theta, cfg.r_bounds)[1]
    histories = {DKN_BO: [], GP_BO: []}
    for i in range(cfg.repeats):
        result = _repeat(cfg, i, params, scaler, j_star)
        for method, hist in result.items():
            histories[method].append(hist)
            if out is not None:
                io.write_history_csv(out / "histories" / f"{method}_{i:03d}.csv", hist)
        if log is not None:
            log(f"repeat {i + 1}/{cfg.repeats}: final regret "
                + ", ".join(f"{m}={h.regrets[-1]:.3g}" for m, h in result.items()))
    summary = {m: regret_stats(h) for m, h in histories.items()}
    if out is not None:
        io.write_summary_csv(out / "summary.csv", summary)
    return ExperimentResult(summary, histories, params, scaler, trace, source, j_star)
