"""
Few-shot BO against classical BO
================================

Run both loops on the target from the same five initial measurements and
print the incumbent after each evaluation. How quickly the few-shot loop
closes in depends strongly on the meta-trained model; the classical GP is a
strong baseline on a one-dimensional parabola. Try a few training seeds.
"""

import numpy as np

from dknbo import bo, dkn, plant
from dknbo.harness.generation import generate_source_task, generate_target_init, \
    sample_source_systems

systems = sample_source_systems(20, seed=1)
source = [generate_source_task(tuple(th), 50, "random", seed=10 + k)
          for k, th in enumerate(systems)]
params, scaler, _ = dkn.meta_train(source, dkn.MetaTrainConfig(iterations=3000, seed=0))

r_star, j_star = plant.optimal_oracle(plant.TARGET_THETA)
acq = bo.AcquisitionConfig(seed=5)

# identical initial data and plant trajectory for both methods
init, ev = generate_target_init(plant.TARGET_THETA, 5, seed=7)
few_shot = bo.run_dkn_bo(params, scaler, ev, init, 10, acq, j_star=j_star)
init, ev = generate_target_init(plant.TARGET_THETA, 5, seed=7)
classical = bo.run_gp_bo(ev, init, 10, acq, j_star=j_star)

print("iteration   DKN-BO r   best J     GP-BO r   best J")
for a, b in zip(few_shot.records, classical.records):
    print(f"{a.iteration:9d}  {a.r[0]:8.3f}  {a.best_J:.5f}   {b.r[0]:8.3f}  {b.best_J:.5f}")
print("optimum:", r_star, j_star)
print("regret after 10 evaluations:", few_shot.regrets[-1], classical.regrets[-1])
