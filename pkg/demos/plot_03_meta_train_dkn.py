"""
Meta-training a deep kernel
===========================

Collect evaluations on 20 source systems, meta-train a deep kernel on them,
then predict the target's performance curve from only five measurements.

Source tasks here use uniform random sampling so the demo runs in a few
seconds; the experiment pipeline uses the mixed random/BO strategy.
"""

import numpy as np

from dknbo import dkn, plant
from dknbo.harness.generation import RANDOM, generate_source_task, generate_target_init, \
    sample_source_systems

systems = sample_source_systems(20, seed=1)
source = [generate_source_task(tuple(th), 50, RANDOM, seed=10 + k, task_id=f"source-{k}")
          for k, th in enumerate(systems)]
print("source label range:", min(t.J.min() for t in source), max(t.J.max() for t in source))

cfg = dkn.MetaTrainConfig(iterations=2000, seed=0)
params, scaler, trace = dkn.meta_train(source, cfg)
print(f"mean task lml {trace.initial_lml:.1f} -> {trace.best_lml:.1f} "
      f"(best at iteration {trace.best_iteration})")

# five measurements on the target system, taken online from the origin
target, _ = generate_target_init(plant.TARGET_THETA, 5, seed=3)
print("target r:", np.round(target.r[:, 0], 2))

grid = np.linspace(-10, 10, 11)
post = dkn.predict(params, scaler, target, grid)
for r, m, s in zip(grid, post.mean, post.std):
    truth = plant.steady_state_oracle(r, plant.TARGET_THETA)[2]
    print(f"r={r:6.1f}  predicted {m:8.3f} +- {2 * s:6.3f}   true {truth:8.3f}")
