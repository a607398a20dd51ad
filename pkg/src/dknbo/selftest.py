"""Randomised invariant checks for every module.

Each check returns ``(passed, detail)``. :func:`run_selftest` runs them all;
the CLI ``selftest`` subcommand and the test suite both go through it.
"""

import itertools
import tempfile
import time
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from . import bo, dkn, gp, kernels, nn_encoder, numerics, plant
from .datasets import TaskDataset
from .kernels import MATERN32, SQUARED_EXPONENTIAL, KernelHyperparams

CHECKS = {}


def check(fn):
    CHECKS[fn.__name__.removeprefix("check_")] = fn
    return fn


def _rel(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def _random_spd(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + n * 1e-3 * np.eye(n)


def cofactor_det(A):
    A = np.asarray(A)
    n = A.shape[0]
    if n == 1:
        return A[0, 0]
    return sum((-1) ** j * A[0, j] * cofactor_det(np.delete(A[1:], j, axis=1))
               for j in range(n))


def _random_hyper(rng, kind):
    return KernelHyperparams(kind, rng.normal(0, 0.5), rng.normal(0, 0.5),
                             rng.normal(-2, 0.5), rng.normal())


# numerics

@check
def check_cholesky_reconstruction():
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in (1, 2, 5, 16, 32):
        for _ in range(4):
            A = _random_spd(rng, n)
            jit = float(rng.choice([0.0, 1e-6, 1e-2]))
            L = numerics.cholesky(A, jit)
            worst = max(worst, _rel(L @ L.T, A + jit * np.eye(n)))
    return worst < 1e-10, f"max relative Frobenius error {worst:.2e}"


@check
def check_chol_solve_identity():
    rng = np.random.default_rng(2)
    worst = 0.0
    for n in (1, 3, 8, 32):
        A = _random_spd(rng, n)
        B = rng.normal(size=(n, 3))
        X = numerics.chol_solve(numerics.cholesky(A, 0.0), B)
        worst = max(worst, _rel(A @ X, B))
    return worst < 1e-9, f"max relative residual {worst:.2e}"


@check
def check_logdet_cofactor():
    rng = np.random.default_rng(3)
    worst = 0.0
    for n in (1, 2, 3, 4):
        for _ in range(5):
            A = _random_spd(rng, n)
            ld = numerics.logdet(numerics.cholesky(A, 0.0))
            worst = max(worst, abs(ld - np.log(cofactor_det(A))))
    return worst < 1e-10, f"max abs error {worst:.2e}"


# encoder

def _encoder_fd(rng, sizes, batch=4):
    p = nn_encoder.init_params(sizes, int(rng.integers(1 << 30)))
    for b in p.biases:
        b[:] = rng.normal(0, 0.3, size=b.shape)
    R = rng.normal(size=(batch, sizes[0]))
    # keep away from ReLU kinks
    for _ in range(20):
        _, cache = nn_encoder.forward(p, R)
        if all(np.min(np.abs(z)) > 1e-6 for z in cache.pre[:-1]):
            break
        R = R + rng.normal(0, 1e-3, size=R.shape)
    U = rng.normal(size=(batch, sizes[-1]))
    grads, g_in = nn_encoder.backward(p, cache, U)
    flat = nn_encoder.flatten(p)

    def f(vec):
        return float(np.sum(U * nn_encoder.forward(nn_encoder.unflatten(vec, sizes), R)[0]))

    fd = numerics.finite_diff_grad(f, flat, 1e-5)
    fd_in = numerics.finite_diff_grad(lambda x: float(np.sum(U * nn_encoder.forward(p, x)[0])), R)
    return max(_rel(nn_encoder.flatten(grads), fd), _rel(g_in, fd_in))


@check
def check_encoder_backward_fd():
    rng = np.random.default_rng(4)
    worst = 0.0
    for sizes in ([1, 5, 3], [2, 6, 6, 2], [1, 8, 8, 8, 4], [3, 6, 6, 6, 6, 2]):
        worst = max(worst, _encoder_fd(rng, sizes))
    return worst < 1e-5, f"max relative error {worst:.2e}"


@check
def check_encoder_homogeneity():
    rng = np.random.default_rng(5)
    p = nn_encoder.init_params([2, 7, 7, 3], 0)
    p = nn_encoder.MlpParameters([np.abs(w) for w in p.weights], [np.zeros_like(b) for b in p.biases])
    R = rng.uniform(0.1, 2.0, size=(6, 2))
    a = nn_encoder.forward(p, 2 * R)[0]
    b = 2 * nn_encoder.forward(p, R)[0]
    err = _rel(a, b)
    return err < 1e-12, f"relative error {err:.2e}"


@check
def check_adam_deterministic():
    rng = np.random.default_rng(6)
    x, g = rng.normal(size=10), rng.normal(size=10)
    s = nn_encoder.AdamState.zeros(10)
    s1, x1 = nn_encoder.adam_step(s, x, g, 1e-2)
    s2, x2 = nn_encoder.adam_step(s, x, g, 1e-2)
    perm = rng.permutation(10)
    _, xp = nn_encoder.adam_step(nn_encoder.AdamState.zeros(10), x[perm], g[perm], 1e-2)
    ok = np.array_equal(x1, x2) and np.array_equal(xp, x1[perm]) and s1.t == 1
    return ok, "repeatable and order independent" if ok else "mismatch"


# kernels

@check
def check_kernel_psd():
    rng = np.random.default_rng(7)
    for kind in kernels.KINDS:
        for n in (1, 4, 16, 64):
            X = rng.uniform(-3, 3, size=(n, 2))
            X[n // 2:] = X[: n - n // 2]  # duplicated rows
            h = _random_hyper(rng, kind)
            K = kernels.kernel_matrix(h, X, X)
            if np.max(np.abs(K - K.T)) > 1e-12 * max(1.0, np.max(np.abs(K))):
                return False, f"{kind}: not symmetric"
            try:
                numerics.cholesky(K, 1e-6)
            except Exception as exc:
                return False, f"{kind} n={n}: {exc}"
    return True, "symmetric and factorisable"


@check
def check_kernel_diagonal():
    rng = np.random.default_rng(8)
    for kind in kernels.KINDS:
        h = _random_hyper(rng, kind)
        X = rng.normal(size=(5, 3))
        if not np.array_equal(np.diag(kernels.kernel_matrix(h, X, X)), np.full(5, h.outputscale)):
            return False, f"{kind}: k(x, x) != outputscale"
    return True, "k(x, x) equals outputscale exactly"


@check
def check_kernel_monotone_decay():
    for kind in kernels.KINDS:
        h = KernelHyperparams.from_constrained(kind, lengthscale=1.3)
        d = np.linspace(0, 8, 400)[:, None]
        k = kernels.kernel_matrix(h, np.zeros((1, 1)), d)[0]
        if not np.all(np.diff(k) < 0):
            return False, f"{kind} not strictly decreasing"
    return True, "strictly decreasing in distance"


@check
def check_kernel_grads_fd():
    rng = np.random.default_rng(9)
    worst = 0.0
    for kind in kernels.KINDS:
        for _ in range(3):
            h = _random_hyper(rng, kind)
            X, Y = rng.normal(size=(3, 2)), rng.normal(size=(4, 2))
            d_ell, d_sf, d_x = kernels.kernel_grads(h, X, Y)
            W = rng.normal(size=(3, 4))

            def f_hyp(v):
                return float(np.sum(W * kernels.kernel_matrix(
                    h.with_vector([v[0], v[1], h.raw_noise, h.constant_mean]), X, Y)))

            fd = numerics.finite_diff_grad(f_hyp, [h.raw_lengthscale, h.raw_outputscale])
            worst = max(worst, _rel([np.sum(W * d_ell), np.sum(W * d_sf)], fd))
            fd_x = numerics.finite_diff_grad(
                lambda x: float(np.sum(W * kernels.kernel_matrix(h, x, Y))), X)
            worst = max(worst, _rel(np.einsum("ij,ijk->ik", W, d_x), fd_x))
    return worst < 1e-5, f"max relative error {worst:.2e}"


# gp

def gp_bruteforce(h, X, y, Xq, jitter=numerics.DEFAULT_JITTER):
    """Prediction and likelihood through explicit inverses and determinants."""
    n = len(y)
    K = kernels.kernel_matrix(h, X, X) + (h.noise + jitter) * np.eye(n)
    Kinv = np.linalg.inv(K)
    Ks = kernels.kernel_matrix(h, X, Xq)
    Kss = kernels.kernel_matrix(h, Xq, Xq)
    resid = y - h.constant_mean
    mean = h.constant_mean + Ks.T @ Kinv @ resid
    var = np.diag(Kss - Ks.T @ Kinv @ Ks)
    lml = -0.5 * np.log(np.linalg.det(K)) - 0.5 * resid @ Kinv @ resid - 0.5 * n * np.log(2 * np.pi)
    return mean, var, lml


def gp_oracle_worst(n_instances=50, seed=10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_instances):
        n = int(rng.integers(1, 7))
        kind = kernels.KINDS[i % 2]
        h = KernelHyperparams(kind, rng.normal(), rng.normal(), rng.normal(-1, 1), rng.normal())
        X = rng.uniform(-2, 2, size=(n, 2))
        y = rng.normal(size=n)
        Xq = rng.uniform(-2, 2, size=(4, 2))
        post = gp.posterior(h, X, y, Xq)
        lml = gp.log_marginal_likelihood(h, X, y)
        m, v, l = gp_bruteforce(h, X, y, Xq)
        worst = max(worst, _rel(post.mean, m), _rel(post.variance, np.maximum(v, 0.0)),
                    abs(lml - l) / max(abs(l), 1e-300))
    return worst


@check
def check_gp_oracle_equivalence():
    worst = gp_oracle_worst()
    return worst < 1e-9, f"max relative error {worst:.2e} over 50 instances"


@check
def check_gp_interpolation():
    ref = KernelHyperparams.from_constrained(SQUARED_EXPONENTIAL, 0.7, 1.0)
    # raw noise far negative puts the noise on its floor
    h = KernelHyperparams(SQUARED_EXPONENTIAL, ref.raw_lengthscale, ref.raw_outputscale, -60.0, 0.3)
    # well separated points (spacing ~6 lengthscales) so K is close to diagonal
    X = np.linspace(-12, 12, 7)[:, None]
    y = np.sin(X[:, 0]) + 2.0
    post = gp.posterior(h, X, y, X)
    mean_ok = np.all(np.abs(post.mean - y) <= 2e-4 * np.abs(y - 0.3) + 1e-6)
    var_ok = np.all(post.variance <= h.noise + 1e-6)
    far = gp.posterior(h, X, y, np.array([[12 + 25 * h.lengthscale]]))
    prior_ok = abs(far.variance[0] - h.outputscale) < 1e-6 and abs(far.mean[0] - 0.3) < 1e-6
    return bool(mean_ok and var_ok and prior_ok), (
        f"interpolation {mean_ok}, train variance {var_ok}, far-field prior {prior_ok}")


@check
def check_gp_monotone_information():
    rng = np.random.default_rng(12)
    for _ in range(20):
        h = _random_hyper(rng, kernels.KINDS[int(rng.integers(2))])
        X = rng.uniform(-2, 2, size=(6, 1))
        y = rng.normal(size=6)
        Xq = rng.uniform(-2, 2, size=(10, 1))
        v_before = gp.posterior(h, X[:5], y[:5], Xq).variance
        v_after = gp.posterior(h, X, y, Xq).variance
        if np.any(v_after > v_before + 1e-8):
            return False, "variance increased after adding a point"
    return True, "variance never increases"


def lml_gradient_error(seed=13):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in kernels.KINDS:
        h = _random_hyper(rng, kind)
        X, y = rng.normal(size=(4, 2)), rng.normal(size=4)
        g_h, g_x = gp.lml_gradients(h, X, y)
        fd_h = numerics.finite_diff_grad(
            lambda v: gp.log_marginal_likelihood(h.with_vector(v), X, y), h.to_vector())
        fd_x = numerics.finite_diff_grad(lambda x: gp.log_marginal_likelihood(h, x, y), X)
        worst = max(worst, _rel(g_h, fd_h), _rel(g_x, fd_x))
    return worst


@check
def check_lml_gradients_fd():
    worst = lml_gradient_error()
    return worst < 1e-5, f"max relative error {worst:.2e}"


# dkn

def dkn_gradient_error(rng, sizes=(1, 8, 8, 2), batch=6):
    """Relative error of analytic vs central-difference DKN loss gradients."""
    p = dkn.init_dkn(sizes, seed=int(rng.integers(1 << 30)))
    for b in p.encoder.biases:
        b[:] = rng.normal(0, 0.3, size=b.shape)
    p = p.with_parts(p.encoder, KernelHyperparams(MATERN32, rng.normal(0, 0.3),
                                                  rng.normal(0, 0.3), rng.normal(-2, 0.3),
                                                  rng.normal(0, 0.3)))
    R = rng.uniform(-2, 2, size=(batch, sizes[0]))
    for _ in range(50):
        _, cache = nn_encoder.forward(p.encoder, R)
        if all(np.min(np.abs(z)) > 1e-6 for z in cache.pre[:-1]):
            break
        R = rng.uniform(-2, 2, size=(batch, sizes[0]))
    y = rng.uniform(0, 1, size=batch)
    _, g_enc, g_base = dkn.dkn_loss_and_grads(p, R, y)

    def loss_enc(vec):
        q = p.with_parts(nn_encoder.unflatten(vec, sizes), p.base)
        return dkn.dkn_loss_and_grads(q, R, y)[0]

    def loss_base(vec):
        return dkn.dkn_loss_and_grads(p.with_parts(p.encoder, p.base.with_vector(vec)), R, y)[0]

    fd_enc = numerics.finite_diff_grad(loss_enc, nn_encoder.flatten(p.encoder), 1e-5)
    fd_base = numerics.finite_diff_grad(loss_base, p.base.to_vector(), 1e-5)
    return _rel(nn_encoder.flatten(g_enc), fd_enc), _rel(g_base, fd_base)


@check
def check_dkn_gradients_fd():
    rng = np.random.default_rng(14)
    worst = max(max(dkn_gradient_error(rng)) for _ in range(5))
    return worst < 1e-4, f"max relative error {worst:.2e}"


@check
def check_dkn_psd():
    rng = np.random.default_rng(15)
    for _ in range(5):
        p = dkn.init_dkn((1, 16, 16, 4), seed=int(rng.integers(1 << 30)))
        R = rng.uniform(-10, 10, size=(40, 1))
        K, _ = dkn.deep_kernel_matrix(p, R, R)
        if np.max(np.abs(K - K.T)) > 1e-12:
            return False, "deep kernel not symmetric"
        try:
            numerics.cholesky(K, 1e-6)
        except Exception as exc:
            return False, str(exc)
    return True, "symmetric and factorisable"


@check
def check_scaler_round_trip():
    rng = np.random.default_rng(16)
    worst = 0.0
    for _ in range(50):
        lo = rng.normal(0, 10)
        s = dkn.LabelScaler(lo, lo + rng.uniform(0.1, 50))
        j = rng.normal(0, 20, size=10)
        back, _ = s.unscale(s.rescale(j), np.zeros(10))
        worst = max(worst, float(np.max(np.abs(back - j) / np.maximum(1, np.abs(j)))))
    return worst < 1e-12, f"max error {worst:.2e}"


def _toy_tasks(a, b, rng, n_tasks=4, n=12):
    tasks = []
    for k in range(n_tasks):
        c = rng.uniform(-1, 1)
        r = rng.uniform(-2, 2, size=(n, 1))
        tasks.append(TaskDataset(f"t{k}", r, a * (1 - (r[:, 0] - c) ** 2) + b))
    return tasks


@check
def check_scale_invariant_ranking():
    grid = np.linspace(-2, 2, 41)[:, None]
    cfg = dkn.MetaTrainConfig(iterations=200, batch_size=6, layer_sizes=(1, 16, 16, 4),
                              lr_schedule=((200, 3e-3, 3e-2),), checkpoint_every=50, seed=3)
    argmaxes = []
    for a, b in ((1.0, 0.0), (7.5, -3.0), (0.02, 100.0)):
        rng = np.random.default_rng(17)
        source = _toy_tasks(a, b, rng)
        r_t = np.array([[-1.5], [0.1], [1.2]])
        target = TaskDataset("target", r_t, a * (1 - (r_t[:, 0] - 0.3) ** 2) + b)
        p, s, _ = dkn.meta_train(source, cfg)
        argmaxes.append(int(np.argmax(dkn.predict(p, s, target, grid).mean)))
    return len(set(argmaxes)) == 1, f"argmax indices {argmaxes}"


# bo

def ei_monte_carlo_error(samples=1_000_000, seed=18):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(samples)
    worst = 0.0
    for std in (0.1, 1.0, 3.0):
        for gap in np.linspace(-3, 3, 13):
            mc = float(np.mean(np.maximum(gap + std * z, 0.0)))
            ei = float(bo.expected_improvement(gap, std, 0.0, 0.0))
            worst = max(worst, abs(mc - ei))
    return worst


@check
def check_ei_properties():
    mean = np.linspace(-3, 3, 61)
    ei = bo.expected_improvement(mean, np.full(61, 0.7), 0.2, 0.01)
    limit = bo.expected_improvement(mean, np.full(61, 1e-12), 0.2, 0.01)
    ok = np.all(ei >= 0) and np.allclose(limit, np.maximum(mean - 0.21, 0), atol=1e-11)
    worst = ei_monte_carlo_error()
    return bool(ok and worst < 3e-3), f"non-negative/limit {ok}, Monte-Carlo error {worst:.2e}"


@check
def check_propose_affine_invariance():
    rng = np.random.default_rng(19)
    cands = rng.uniform(-1, 1, size=(50, 1))
    post = gp.GpPosterior(rng.normal(size=50), rng.uniform(0.01, 1, size=50))
    acq = bo.AcquisitionConfig(kind=bo.UCB, beta=2.0)
    base = bo.propose_next(post, cands, acq, 0.0)
    for a, b in ((2.0, 1.0), (0.1, -5.0)):
        # UCB of (a*mean + b, a*std) is a*UCB + b
        moved = gp.GpPosterior(a * post.mean + b, a * a * post.variance)
        if not np.array_equal(bo.propose_next(moved, cands, acq, 0.0), base):
            return False, "argmax changed under a positive affine map"
    return True, "argmax unchanged"


@check
def check_bo_regret_monotone():
    th = plant.TARGET_THETA
    j_star = plant.optimal_oracle(th)[1]
    f = lambda r: plant.steady_state_oracle(r, th)[2]  # noqa: E731
    init = TaskDataset("t", [[-8.0], [3.0], [7.0]], [f(-8.0), f(3.0), f(7.0)])
    hist = bo.run_gp_bo(f, init, 8, bo.AcquisitionConfig(seed=1, candidate_count=128),
                        bo.GpFitConfig(iters=50), j_star=j_star)
    reg = hist.regrets
    ok = len(hist) == 8 and np.all(np.diff(reg) <= 0) and np.all(reg >= -1e-9)
    inside = np.all((hist.proposals >= -10) & (hist.proposals <= 10))
    return bool(ok and inside), f"regrets {np.array2string(reg, precision=3)}"


# plant

def plant_oracle_worst(h=0.01, t_f=10.0):
    worst = 0.0
    for theta in ((1, 1), (1, 6), (6, 1), (6, 6), (2, 5)):
        for r in range(-10, 11, 2):
            J, _ = plant.evaluate_performance(plant.PlantState(), float(r), theta, t_f, h)
            worst = max(worst, abs(J - plant.steady_state_oracle(float(r), theta)[2]))
    return worst


@check
def check_plant_steady_state():
    worst = plant_oracle_worst()
    eq_worst = 0.0
    for theta in itertools.product((1.0, 3.5, 6.0), repeat=2):
        for r in np.linspace(-10, 10, 7):
            x1, x2, _ = plant.steady_state_oracle(r, theta)
            eq_worst = max(eq_worst, *map(abs, plant.derivatives(plant.PlantState(x1, x2), r, theta)))
    return worst < 1e-3 and eq_worst < 1e-12, (
        f"max |J - J_inf| {worst:.2e}, equilibrium residual {eq_worst:.2e}")


@check
def check_plant_optimal_oracle():
    grid = np.linspace(-10, 10, 100_000)
    for theta in ((2, 5), (3, 3), (6, 1), (1, 6), (4.2, 1.7)):
        _, j_star = plant.optimal_oracle(theta)
        vals = 1 - theta[0] * grid / 6 - theta[1] * grid ** 2 / 36
        if vals.max() > j_star + 1e-8:
            return False, f"grid beats oracle for theta={theta}"
    return True, "no grid point exceeds J*"


def rk4_order_factor(theta=(2.0, 5.0), r=-1.2, T=1.0, h=0.05, x0=(0.5, -0.3)):
    """Error ratio between step sizes ``h`` and ``h/2`` against the exact
    solution (the closed loop is linear, so the augmented matrix exponential
    gives it)."""
    th1 = theta[0]
    A = np.array([[-th1, 1.0, 0.0],
                  [-6.0 - (th1 - 5.0) * th1, th1 - 5.0, r],
                  [0.0, 0.0, 0.0]])
    exact = (expm(A * T) @ np.array([x0[0], x0[1], 1.0]))[:2]
    errs = []
    for step in (h, h / 2):
        s = plant.PlantState(*x0)
        for _ in range(int(round(T / step))):
            s = plant.rk4_step(s, r, theta, step)
        errs.append(np.linalg.norm(np.array([s.x1, s.x2]) - exact))
    return errs[0] / errs[1]


@check
def check_rk4_order():
    factor = rk4_order_factor()
    return 12 <= factor <= 20, f"halving factor {factor:.2f}"


# harness

@check
def check_dataset_round_trip():
    from .harness import io

    rng = np.random.default_rng(20)
    tasks = [TaskDataset(f"task-{k}", rng.uniform(-10, 10, size=(5, 1)),
                         rng.normal(size=5) * 10 ** rng.uniform(-5, 5, size=5),
                         None if k == 0 else tuple(rng.uniform(1, 6, size=2)))
             for k in range(3)]
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "data.jsonl"
        io.write_datasets(path, tasks)
        back = io.read_datasets(path)
    return back == tasks, "exact round trip" if back == tasks else "mismatch"


def run_selftest(names=None, out=None):
    """Run the named checks (all by default); returns ``[(name, ok, detail, seconds)]``."""
    results = []
    for name, fn in CHECKS.items():
        if names is not None and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        dt = time.perf_counter() - t0
        results.append((name, bool(ok), detail, dt))
        if out is not None:
            out(f"[{'PASS' if ok else 'FAIL'}] {name} ({dt:.2f}s): {detail}")
    return results
