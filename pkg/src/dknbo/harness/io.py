"""File formats: task datasets (JSON lines), checkpoints and configs (JSON),
histories and summaries (CSV).

Floats are written with ``repr`` so every value round-trips exactly.
"""

import csv
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..datasets import TaskDataset
from ..dkn import DknParameters, LabelScaler, MetaTrainConfig
from ..kernels import KernelHyperparams
from ..nn_encoder import flatten, unflatten

DATASET_FORMAT = "dknbo-taskdata"
CHECKPOINT_FORMAT = "dknbo-checkpoint"
FORMAT_VERSION = 1


class FormatError(ValueError):
    """A file does not have the expected header or fields."""


def write_datasets(path, tasks):
    """Write tasks as JSON lines: one header line, then one record per point."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(json.dumps({"format": DATASET_FORMAT, "version": FORMAT_VERSION}) + "\n")
        for task in tasks:
            theta = None if task.theta is None else [float(t) for t in task.theta]
            if len(task) == 0:
                fh.write(json.dumps({"task_id": task.task_id, "theta": theta,
                                     "r": None, "J": None, "n_r": task.n_r}) + "\n")
            for r, J in zip(task.r, task.J):
                fh.write(json.dumps({"task_id": task.task_id, "theta": theta,
                                     "r": [float(x) for x in r], "J": float(J)}) + "\n")


def read_datasets(path):
    """Inverse of :func:`write_datasets`; task order is preserved."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("format") != DATASET_FORMAT:
            raise FormatError(f"{path} is not a task dataset file")
        if header.get("version") != FORMAT_VERSION:
            raise FormatError(f"unsupported dataset version {header.get('version')}")
        order, rows = [], {}
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            tid = rec["task_id"]
            if tid not in rows:
                order.append(tid)
                rows[tid] = {"theta": rec.get("theta"), "r": [], "J": [],
                             "n_r": rec.get("n_r")}
            if rec.get("r") is not None:
                rows[tid]["r"].append(rec["r"])
                rows[tid]["J"].append(rec["J"])
    tasks = []
    for tid in order:
        row = rows[tid]
        n_r = row["n_r"] or (len(row["r"][0]) if row["r"] else 1)
        r = np.array(row["r"], dtype=np.float64).reshape(-1, n_r)
        tasks.append(TaskDataset(tid, r, row["J"], row["theta"]))
    return tasks


def _meta_to_dict(cfg):
    out = asdict(cfg)
    out["init_base"] = None if cfg.init_base is None else asdict(cfg.init_base)
    out["lr_schedule"] = [list(s) for s in cfg.lr_schedule]
    out["layer_sizes"] = list(cfg.layer_sizes)
    out["input_bounds"] = None if cfg.input_bounds is None else list(cfg.input_bounds)
    return out


def meta_config_from_dict(d):
    d = dict(d)
    if d.get("init_base") is not None:
        d["init_base"] = KernelHyperparams(**d["init_base"])
    if d.get("input_bounds") is not None:
        d["input_bounds"] = tuple(d["input_bounds"])
    return MetaTrainConfig(**d)


def save_checkpoint(path, params, scaler, cfg=None, trace=None):
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": FORMAT_VERSION,
        "layer_sizes": params.encoder.layer_sizes,
        "encoder": flatten(params.encoder).tolist(),
        "base": asdict(params.base),
        "input_offset": params.input_offset,
        "input_scale": params.input_scale,
        "scaler": {"j_min": scaler.j_min, "j_max": scaler.j_max},
        "config": None if cfg is None else _meta_to_dict(cfg),
    }
    if trace is not None:
        doc["initial_lml"] = trace.initial_lml
        doc["best_lml"] = trace.best_lml
        doc["best_iteration"] = trace.best_iteration
        doc["final_lml"] = trace.checkpoints[-1][1] if trace.checkpoints else None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1))


def load_checkpoint(path):
    """Returns ``(params, scaler, meta_config_or_None)``."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(f"{path} is not a checkpoint")
    encoder = unflatten(doc["encoder"], doc["layer_sizes"])
    params = DknParameters(encoder, KernelHyperparams(**doc["base"]),
                           doc["input_offset"], doc["input_scale"])
    scaler = LabelScaler(**doc["scaler"])
    cfg = None if doc.get("config") is None else meta_config_from_dict(doc["config"])
    return params, scaler, cfg


def write_history_csv(path, history):
    """Columns: iteration, r (or r0..r{k}), J, best_J, regret."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n_r = len(history.records[0].r) if history.records else 1
    r_cols = ["r"] if n_r == 1 else [f"r{i}" for i in range(n_r)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", *r_cols, "J", "best_J", "regret"])
        for rec in history.records:
            w.writerow([rec.iteration, *(repr(float(x)) for x in rec.r),
                        repr(rec.J), repr(rec.best_J), repr(rec.regret)])


def read_history_csv(path):
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def write_summary_csv(path, summaries):
    """Columns: iteration, method, regret_median, regret_p05, regret_p95."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "method", "regret_median", "regret_p05", "regret_p95"])
        for method, s in summaries.items():
            for i, (m, lo, hi) in enumerate(zip(s.median, s.p05, s.p95), start=1):
                w.writerow([i, method, repr(float(m)), repr(float(lo)), repr(float(hi))])


def write_rows_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x
                        for x in row])
