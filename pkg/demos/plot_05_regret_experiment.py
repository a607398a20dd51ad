"""
Regret curves over repeated targets
===================================

The full pipeline: generate source data, meta-train once, then run paired
DKN-BO and GP-BO on freshly initialised targets and summarise simple regret
by its median and 5th/95th percentiles. The full scale is
``ExperimentConfig()``; this demo uses a smaller one (about a minute).
Pass an output directory to keep the CSV files.
"""

import sys

from dknbo import dkn
from dknbo.harness.experiment import DKN_BO, GP_BO, ExperimentConfig, run_experiment

out = sys.argv[1] if len(sys.argv) > 1 else None
cfg = ExperimentConfig(repeats=10, bo_budget=10, meta=dkn.MetaTrainConfig(iterations=3000))
res = run_experiment(cfg, out, log=print)

print("iteration   DKN-BO median [p05, p95]            GP-BO median [p05, p95]")
for i in range(cfg.bo_budget):
    d, g = res.summary[DKN_BO], res.summary[GP_BO]
    print(f"{i + 1:9d}   {d.median[i]:.2e} [{d.p05[i]:.1e}, {d.p95[i]:.1e}]"
          f"      {g.median[i]:.2e} [{g.p05[i]:.1e}, {g.p95[i]:.1e}]")
