"""Command-line entry point: ``rann-deeponet {gen-data,train,eval,sweep,bench}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import (
    EXPERIMENTS,
    SCALES,
    ExperimentConfig,
    build_model,
    evaluate,
    neuron_sweep,
    run_experiment,
    train_config,
)
from .datagen.dataset import EXAMPLES, build_dataset
from .errors import RannError
from .io import load_dataset, load_model, save_dataset, save_model
from .train import poisson_operator, train


def _config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig.preset(args.example, args.scale)
    for item in getattr(args, "set", None) or []:
        key, _, value = item.partition("=")
        cfg = ExperimentConfig.from_text(cfg.to_text() + f"{key.strip()} = {value.strip()}\n")
    return cfg


def cmd_gen_data(args):
    ds = build_dataset(args.example, args.n, m=args.m, q=args.q, rng_seed=args.seed, layout=args.layout)
    save_dataset(ds, args.out)
    print(f"wrote {ds.n_realizations} realizations ({args.example}) to {args.out}")


def cmd_train(args):
    cfg = ExperimentConfig.from_file(args.config)
    data = load_dataset(args.data)
    model = build_model(cfg, data)
    pde = None
    if cfg.physics_informed:
        data, pde = data.without_solution(), poisson_operator(2, 1.0, 1.0)
    rep = train(model, data, train_config(cfg), pde)
    save_model(model, args.out)
    print(f"trained {rep.rows_used} rows x {rep.n_cols} unknowns in {rep.train_seconds:.2f}s "
          f"(rank {rep.effective_rank}, residual {rep.residual_norm:.3e})")


def cmd_eval(args):
    model = load_model(args.model)
    data = load_dataset(args.data)
    errors, _ = evaluate(model, data)
    text = (f"n_cases = {errors.size}\nmean_rel_l2 = {errors.mean()!r}\n"
            f"worst_rel_l2 = {errors.max()!r}\n")
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        Path(args.report).write_text(text)
    print(text, end="")


def cmd_sweep(args):
    cfg = _config(args)
    rows = neuron_sweep(cfg, args.axis, args.values, args.out)
    for r in rows:
        print(f"{r['axis']}={r['value']:>4d}  mean rel l2 {r['mean_rel_l2']:.4e}")


def cmd_bench(args):
    cfg = _config(args)
    out = args.out or f"runs/{cfg.example_id}_{cfg.scale}"
    cfg = cfg.replace(out_dir=out, data_dir=args.data_dir or "")
    rep = run_experiment(cfg)
    print(rep.to_text(), end="")
    print(f"# outputs in {out}; wall clock {rep.timing['total_seconds']:.1f}s")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rann-deeponet", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate and save a dataset")
    g.add_argument("--example", choices=EXAMPLES, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--m", type=int, default=None)
    g.add_argument("--q", type=int, default=None)
    g.add_argument("--layout", choices=("random", "grid"), default="random")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a model on a saved dataset")
    t.add_argument("--config", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a saved model on a saved dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--report", default=None)
    e.set_defaults(func=cmd_eval)

    for name, func, helptext in (("sweep", cmd_sweep, "width sweep over k or p"),
                                 ("bench", cmd_bench, "run one preset experiment")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--example", choices=EXPERIMENTS, default="burgers" if name == "sweep" else "dr")
        s.add_argument("--scale", choices=SCALES, default="desk")
        s.add_argument("--config", default=None, help="key = value file overriding the preset")
        s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one field")
        s.set_defaults(func=func)
    sw = sub.choices["sweep"]
    sw.add_argument("--axis", choices=("k", "p"), required=True)
    sw.add_argument("--values", type=int, nargs="+", required=True)
    sw.add_argument("--out", default=None, help="CSV path for the sweep table")
    bn = sub.choices["bench"]
    bn.add_argument("--out", default=None, help="output directory")
    bn.add_argument("--data-dir", default=None, help="dataset cache directory")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    np.set_printoptions(precision=6)
    try:
        args.func(args)
    except (RannError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
