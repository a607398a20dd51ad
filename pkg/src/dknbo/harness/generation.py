"""Source and target data generation on the benchmark plant."""

import numpy as np

from .. import bo
from ..datasets import TaskDataset
from ..plant import R_BOUNDS, THETA_BOUNDS, PlantEvaluator, PlantParams

MIXED, RANDOM = "mixed", "random"


def sample_source_systems(n, theta_bounds=THETA_BOUNDS, seed=0, tol=1e-9):
    """``n`` distinct parameter vectors drawn uniformly from the box."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in theta_bounds], dtype=np.float64)
    hi = np.array([b[1] for b in theta_bounds], dtype=np.float64)
    degenerate = np.all(hi - lo <= tol)
    out = []
    while len(out) < n:
        th = rng.uniform(lo, hi)
        if not degenerate and any(np.max(np.abs(th - np.array(tuple(o)))) <= tol for o in out):
            continue
        out.append(PlantParams(float(th[0]), float(th[1])))
    return out


def generate_source_task(theta, t_k=50, strategy=MIXED, seed=0, task_id=None,
                         n_random=None, t_f=10.0, h=0.01, r_bounds=R_BOUNDS,
                         gp_fit=None, acq=None):
    """Collect ``t_k`` evaluations on one source system.

    ``mixed`` starts with ``max(10, t_k // 5)`` uniform draws (or
    ``n_random``) and continues with classical GP-BO; ``random`` uses uniform
    draws throughout. The plant is reset to the origin for every evaluation.
    """
    if t_k < 1:
        raise ValueError("t_k must be positive")
    if strategy not in (MIXED, RANDOM):
        raise ValueError(f"unknown strategy {strategy!r}")
    rng = np.random.default_rng(seed)
    evaluator = PlantEvaluator(theta, t_f=t_f, h=h, reset=True)
    if strategy == RANDOM:
        n_init = t_k
    else:
        n_init = max(10, t_k // 5) if n_random is None else n_random
        n_init = min(max(n_init, 2), t_k)
    lo, hi = r_bounds
    task_id = f"source-{seed}" if task_id is None else task_id
    data = TaskDataset(task_id, np.zeros((0, 1)), np.zeros(0), tuple(theta))
    for r in rng.uniform(lo, hi, size=n_init):
        data = data.append([r], evaluator([r]))
    remaining = t_k - n_init
    if remaining > 0:
        acq = bo.AcquisitionConfig(seed=int(rng.integers(2 ** 63))) if acq is None else acq
        hist = bo.run_gp_bo(evaluator, data, remaining, acq, gp_fit,
                            r_bounds=((lo,), (hi,)))
        for rec in hist.records:
            data = data.append(rec.r, rec.J)
    return data


def generate_target_init(theta, t=5, seed=0, t_f=10.0, h=0.01, r_bounds=R_BOUNDS,
                         noise_std=0.0, task_id="target"):
    """``t`` uniform evaluations on the target, run online from the origin.

    Returns ``(dataset, evaluator)``; the evaluator holds the plant state so
    a BO loop can continue the same trajectory.
    """
    if t < 1:
        raise ValueError("t must be positive")
    rng = np.random.default_rng(seed)
    evaluator = PlantEvaluator(theta, t_f=t_f, h=h, noise_std=noise_std, reset=False,
                               seed=rng.integers(2 ** 63))
    lo, hi = r_bounds
    data = TaskDataset(task_id, np.zeros((0, 1)), np.zeros(0), tuple(theta))
    for r in rng.uniform(lo, hi, size=t):
        data = data.append([r], evaluator([r]))
    return data, evaluator
