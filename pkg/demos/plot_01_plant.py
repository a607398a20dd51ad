"""
The benchmark closed loop
=========================

A second-order plant runs under a fixed stabilising policy with one tunable
input ``r``. After the transient the state settles at ``x1 = r / 6``, and the
long-run performance is a concave parabola in ``r``.
"""

import numpy as np

from dknbo import plant

theta = plant.TARGET_THETA

# simulate ten seconds from the origin and compare with the equilibrium
for r in (-6.0, -1.2, 0.0, 3.0):
    J, state = plant.evaluate_performance(plant.PlantState(), r, theta)
    x1, _, J_inf = plant.steady_state_oracle(r, theta)
    print(f"r={r:5.1f}  x1={state.x1:.6f} (equilibrium {x1:.6f})  J={J:.6f} (oracle {J_inf:.6f})")

# the best achievable setting inside the admissible interval
r_star, j_star = plant.optimal_oracle(theta)
print("optimum:", r_star, j_star)

# a brute-force check of the oracle on a fine grid
grid = np.linspace(*plant.R_BOUNDS, 20001)
J_grid = 1 - theta[0] * grid / 6 - theta[1] * grid ** 2 / 36
print("grid maximum:", grid[np.argmax(J_grid)], J_grid.max())

# Online evaluation keeps the plant running between calls, so a short
# experiment still carries the previous transient. With t_f = 10 s the
# carried-over state has decayed below plotting precision.
online = plant.PlantEvaluator(theta, t_f=1.0)
fresh = plant.PlantEvaluator(theta, t_f=1.0, reset=True)
for r in (5.0, -1.2):
    print(f"r={r:5.1f}  online J={online([r]):.4f}  from origin J={fresh([r]):.4f}")
