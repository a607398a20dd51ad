"""Command line entry point: ``dknbo <subcommand> [options]``."""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import bo, dkn
from ..plant import PlantEvaluator, optimal_oracle
from ..selftest import run_selftest
from . import io
from .experiment import (
    ExperimentConfig, load_config, make_source_data, meta_config, run_experiment,
    train_on_source,
)
from .generation import generate_target_init
from .seeds import derive_seed


def _log(msg):
    print(msg, file=sys.stderr, flush=True)


def _config(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def _out(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(text, default):
    lo, hi, n = (default if text is None else text.split(","))
    return np.linspace(float(lo), float(hi), int(n))[:, None]


def cmd_gen_source(args):
    cfg = _config(args)
    path = _out(args) / "source.jsonl"
    io.write_datasets(path, make_source_data(cfg, _log))
    print(path)


def cmd_train(args):
    cfg = _config(args)
    source = io.read_datasets(args.source)
    params, scaler, trace = train_on_source(cfg, source, _log if args.verbose else None)
    path = _out(args) / "checkpoint.json"
    io.save_checkpoint(path, params, scaler, meta_config(cfg), trace)
    _log(f"best mean task lml {trace.best_lml:.4f} at iteration {trace.best_iteration}")
    print(path)


def cmd_predict(args):
    cfg = _config(args)
    params, scaler, _ = io.load_checkpoint(args.checkpoint)
    target = io.read_datasets(args.target)[0]
    grid = _grid(args.grid, (cfg.r_bounds[0], cfg.r_bounds[1], 401))
    post = dkn.predict(params, scaler, target, grid)
    path = _out(args) / "predictions.csv"
    io.write_rows_csv(path, ["r", "mean", "variance"],
                      zip(grid[:, 0], post.mean, post.variance))
    print(path)


def _target(cfg, args):
    seed = derive_seed(cfg.master_seed, "target-init", 0)
    if args.target:
        # the online trajectory starts from the origin
        init = io.read_datasets(args.target)[0]
        ev = PlantEvaluator(cfg.target_theta, cfg.t_f, cfg.h, cfg.noise_std, seed=seed)
        return init, ev
    return generate_target_init(cfg.target_theta, cfg.t_init, seed, cfg.t_f, cfg.h,
                                cfg.r_bounds, cfg.noise_std)


def _write_run(out, hist, evaluator, init):
    io.write_history_csv(out / "history.csv", hist)
    io.write_datasets(out / "target.jsonl", [init])
    io.write_rows_csv(out / "trajectory.csv", ["t", "x1", "x2", "r", "J"], evaluator.trajectory)
    print(out / "history.csv")


def cmd_run_bo(args):
    cfg = _config(args)
    params, scaler, _ = io.load_checkpoint(args.checkpoint)
    init, ev = _target(cfg, args)
    acq = replace(cfg.acq, seed=derive_seed(cfg.master_seed, "acquisition", 0))
    j_star = optimal_oracle(cfg.target_theta, cfg.r_bounds)[1]
    hist = bo.run_dkn_bo(params, scaler, ev, init, cfg.bo_budget, acq,
                         ((cfg.r_bounds[0],), (cfg.r_bounds[1],)), j_star=j_star,
                         retrain_base=cfg.retrain_base)
    _write_run(_out(args), hist, ev, init)


def cmd_run_baseline(args):
    cfg = _config(args)
    init, ev = _target(cfg, args)
    acq = replace(cfg.acq, seed=derive_seed(cfg.master_seed, "acquisition", 0))
    j_star = optimal_oracle(cfg.target_theta, cfg.r_bounds)[1]
    hist = bo.run_gp_bo(ev, init, cfg.bo_budget, acq, cfg.gp_fit,
                        ((cfg.r_bounds[0],), (cfg.r_bounds[1],)), j_star=j_star)
    _write_run(_out(args), hist, ev, init)


def cmd_experiment(args):
    cfg = _config(args)
    out = _out(args)
    source = io.read_datasets(args.source) if args.source else None
    trained = None
    if args.checkpoint:
        params, scaler, _ = io.load_checkpoint(args.checkpoint)
        trained = (params, scaler, dkn.TrainingTrace())
    res = run_experiment(cfg, out, source=source, trained=trained, log=_log)
    for method, s in res.summary.items():
        _log(f"{method}: final median regret {s.median[-1]:.3g}")
    print(out / "summary.csv")


def cmd_selftest(args):
    results = run_selftest(args.only or None, out=print)
    failed = [name for name, ok, _, _ in results if not ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="dknbo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON experiment config (missing keys use defaults)")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", default=".", help="output directory")
        p.set_defaults(func=fn)
        return p

    add("gen-source", cmd_gen_source, "generate the source-task dataset file")
    p = add("train", cmd_train, "meta-train a deep kernel on a source file")
    p.add_argument("--source", required=True)
    p.add_argument("--verbose", action="store_true")
    p = add("predict", cmd_predict, "posterior mean/variance on a grid given target data")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--grid", help="lo,hi,n, for example --grid=-10,10,401 (default: r bounds, 401 points)")
    p = add("run-bo", cmd_run_bo, "few-shot BO with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--target", help="initial target data file (default: random init)")
    p = add("run-baseline", cmd_run_baseline, "classical GP-BO on the target")
    p.add_argument("--target", help="initial target data file (default: random init)")
    p = add("experiment", cmd_experiment, "full regret experiment, writes summary.csv")
    p.add_argument("--source", help="reuse a source file instead of generating one")
    p.add_argument("--checkpoint", help="reuse a trained checkpoint instead of training")
    p = add("selftest", cmd_selftest, "run the invariant checks")
    p.add_argument("--only", nargs="*", help="names of checks to run")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args) or 0


if __name__ == "__main__":
    sys.exit(main())
