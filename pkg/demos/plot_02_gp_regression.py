"""
Exact Gaussian process regression
=================================

Fit the hyperparameters of a squared-exponential GP by maximising the log
marginal likelihood, then look at the posterior between and beyond the data.
"""

import numpy as np

from dknbo import gp
from dknbo.kernels import SQUARED_EXPONENTIAL, KernelHyperparams

rng = np.random.default_rng(0)
X = rng.uniform(-5, 5, size=(25, 1))
y = np.sin(X[:, 0]) + 0.05 * rng.normal(size=25)

init = KernelHyperparams(kind=SQUARED_EXPONENTIAL)
fitted = gp.fit_hyperparameters(X, y, init, iters=200, lr=0.05)
print("initial lml:", gp.log_marginal_likelihood(init, X, y))
print("fitted lml: ", gp.log_marginal_likelihood(fitted, X, y))
print(f"lengthscale {fitted.lengthscale:.3f}, outputscale {fitted.outputscale:.3f}, "
      f"noise {fitted.noise:.2e}")

# the posterior tracks sin(x) inside the data and reverts to the prior outside
Xq = np.linspace(-8, 8, 9)[:, None]
post = gp.posterior(fitted, X, y, Xq)
for x, m, s in zip(Xq[:, 0], post.mean, post.std):
    print(f"x={x:5.1f}  mean={m:7.3f}  std={s:.3f}  sin(x)={np.sin(x):7.3f}")

# analytic gradients of the log marginal likelihood
lml, grad_hyper, grad_X = gp.lml_and_gradients(fitted, X, y)
print("gradient at the optimum (should be small):", np.round(grad_hyper, 4))
