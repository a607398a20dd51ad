"""Benchmark closed loop: a second-order nonlinear plant under a stabilising
policy with one tunable setpoint-like parameter ``r``.

    x1' = x2 - th1 x1
    x2' = -th2 x1^2 + kappa(x, r)
    kappa(x, r) = -6 x1 + (th1 - 5)(x2 - th1 x1) + th2 x1^2 + r
    J = 1 - th1 x1 - th2 x1^2

Under the policy ``x1`` obeys ``x1'' = -5 x1' - 6 x1 + r`` (poles at -2 and
-3), so the steady state ``x1 = r/6`` is reached from anywhere.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import NonFiniteState

R_BOUNDS = (-10.0, 10.0)
THETA_BOUNDS = ((1.0, 6.0), (1.0, 6.0))
TARGET_THETA = (2.0, 5.0)


@dataclass(frozen=True)
class PlantParams:
    theta1: float
    theta2: float

    def __iter__(self):
        return iter((self.theta1, self.theta2))


@dataclass(frozen=True)
class PlantState:
    x1: float = 0.0
    x2: float = 0.0
    t: float = 0.0


def _theta(theta):
    th1, th2 = theta
    return float(th1), float(th2)


def _scalar_r(r):
    return float(np.asarray(r, dtype=np.float64).reshape(-1)[0])


def derivatives(state, r, theta):
    th1, th2 = _theta(theta)
    return _rhs(state.x1, state.x2, _scalar_r(r), th1, th2)


def _rhs(x1, x2, r, th1, th2):
    e = x2 - th1 * x1
    kappa = -6.0 * x1 + (th1 - 5.0) * e + th2 * x1 * x1 + r
    return e, -th2 * x1 * x1 + kappa


def _rk4(x1, x2, r, th1, th2, h):
    k1a, k1b = _rhs(x1, x2, r, th1, th2)
    k2a, k2b = _rhs(x1 + 0.5 * h * k1a, x2 + 0.5 * h * k1b, r, th1, th2)
    k3a, k3b = _rhs(x1 + 0.5 * h * k2a, x2 + 0.5 * h * k2b, r, th1, th2)
    k4a, k4b = _rhs(x1 + h * k3a, x2 + h * k3b, r, th1, th2)
    return (x1 + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a),
            x2 + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b))


def rk4_step(state, r, theta, h):
    """Advance one classical RK4 step with ``r`` held constant."""
    if not h > 0:
        raise ValueError("step size must be positive")
    th1, th2 = _theta(theta)
    x1, x2 = _rk4(state.x1, state.x2, _scalar_r(r), th1, th2, h)
    if not (math.isfinite(x1) and math.isfinite(x2)):
        raise NonFiniteState(f"state diverged at t={state.t + h}")
    return PlantState(x1, x2, state.t + h)


def simulate(state, r, theta, t_f, h=0.01):
    """Integrate ``round(t_f / h)`` RK4 steps from ``state``."""
    if not h > 0:
        raise ValueError("step size must be positive")
    th1, th2 = _theta(theta)
    r = _scalar_r(r)
    steps = int(round(t_f / h))
    x1, x2 = state.x1, state.x2
    for _ in range(steps):
        x1, x2 = _rk4(x1, x2, r, th1, th2, h)
    if not (math.isfinite(x1) and math.isfinite(x2)):
        raise NonFiniteState(f"state diverged within {t_f} s at r={r}")
    return PlantState(x1, x2, state.t + steps * h)


def performance(x1, theta):
    th1, th2 = _theta(theta)
    return 1.0 - th1 * x1 - th2 * x1 * x1


def evaluate_performance(state, r, theta, t_f=10.0, h=0.01, noise_std=0.0, rng=None):
    """Run the loop for ``t_f`` seconds from ``state`` and measure ``J``.

    The plant is not reset. Returns ``(J, new_state)``. ``t_f / h`` is rounded
    to the nearest whole number of steps.
    """
    new_state = simulate(state, r, theta, t_f, h)
    J = performance(new_state.x1, theta)
    if noise_std > 0:
        rng = np.random.default_rng() if rng is None else rng
        J += float(rng.normal(0.0, noise_std))
    return J, new_state


def steady_state_oracle(r, theta):
    """Equilibrium ``(x1, x2, J)`` for a constant ``r``."""
    th1, th2 = _theta(theta)
    r = _scalar_r(r)
    x1 = r / 6.0
    return x1, th1 * x1, 1.0 - th1 * r / 6.0 - th2 * r * r / 36.0


def optimal_oracle(theta, r_bounds=R_BOUNDS):
    """Best steady-state ``(r*, J*)`` over the admissible interval."""
    th1, th2 = _theta(theta)
    lo, hi = r_bounds
    r_star = min(max(-3.0 * th1 / th2, lo), hi)
    return r_star, steady_state_oracle(r_star, theta)[2]


class PlantEvaluator:
    """Objective callback ``r -> J`` for BO loops.

    With ``reset=False`` (the online protocol) each call continues from the
    state left by the previous one; with ``reset=True`` every evaluation
    starts at ``initial``.
    """

    def __init__(self, theta, t_f=10.0, h=0.01, noise_std=0.0, reset=False,
                 initial=PlantState(), seed=None):
        self.theta = PlantParams(*_theta(theta))
        self.t_f, self.h, self.noise_std = t_f, h, noise_std
        self.reset = reset
        self.initial = initial
        self.state = initial
        self.rng = np.random.default_rng(seed)
        self.trajectory = []  # (t, x1, x2, r, J) after each evaluation

    def __call__(self, r):
        start = self.initial if self.reset else self.state
        J, self.state = evaluate_performance(
            start, r, self.theta, self.t_f, self.h, self.noise_std, self.rng)
        self.trajectory.append((self.state.t, self.state.x1, self.state.x2, _scalar_r(r), J))
        return J
