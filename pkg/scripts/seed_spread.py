"""Spread of the test error over model seeds on one dataset.

Only the hidden-layer draws change between runs; data and row sampling stay fixed.

    python scripts/seed_spread.py --example dr --seeds 0 1 2 3 4 5 6 7
"""
import argparse

import numpy as np

from rann_deeponet.bench import EXPERIMENTS, SCALES, ExperimentConfig, generate_data, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--example", choices=EXPERIMENTS, default="dr")
    ap.add_argument("--scale", choices=SCALES, default="desk")
    ap.add_argument("--seeds", type=int, nargs="+", default=list(range(8)))
    args = ap.parse_args()

    base = ExperimentConfig.preset(args.example, args.scale)
    data = generate_data(base)
    errs = []
    for s in args.seeds:
        rep = run_experiment(base.replace(seed=s), data)
        errs.append(rep.mean_rel_l2)
        print(f"seed {s:>3d}: mean rel l2 {rep.mean_rel_l2:.4e}", flush=True)
    e = np.array(errs)
    print(f"min {e.min():.4e}  median {np.median(e):.4e}  max {e.max():.4e}")


if __name__ == "__main__":
    main()
