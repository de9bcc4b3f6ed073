"""Run the benchmark experiments and print a summary table.

    python scripts/run_benchmarks.py --scale desk
    python scripts/run_benchmarks.py --scale paper --examples dr darcy
"""
import argparse
import logging

from rann_deeponet.bench import EXPERIMENTS, PUBLISHED, SCALES, ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", choices=SCALES, default="desk")
    ap.add_argument("--examples", nargs="+", choices=EXPERIMENTS, default=list(EXPERIMENTS))
    ap.add_argument("--plain-dr", action="store_true", help="also run diffusion-reaction without the cutoff")
    ap.add_argument("--out", default="runs")
    ap.add_argument("--data-dir", default="data", help="dataset cache root")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    jobs = [(ex, True) for ex in args.examples]
    if args.plain_dr and "dr" in args.examples:
        jobs.append(("dr", False))
    rows = []
    for ex, hard in jobs:
        tag = f"{ex}_{args.scale}" + ("" if hard else "_plain")
        data_id = "darcy" if ex == "darcy_pi" else ex
        cfg = ExperimentConfig.preset(ex, args.scale, hard_constraint=hard, out_dir=f"{args.out}/{tag}",
                                      data_dir=f"{args.data_dir}/{data_id}_{args.scale}")
        rep = run_experiment(cfg)
        rows.append((tag, rep.mean_rel_l2, rep.worst_rel_l2, PUBLISHED.get((ex, hard)),
                     rep.timing["total_seconds"]))
    print(f"{'run':<22}{'mean rel l2':>14}{'worst':>12}{'published':>12}{'seconds':>10}")
    for tag, mean, worst, pub, secs in rows:
        pub_s = f"{pub:.2e}" if pub is not None else "-"
        print(f"{tag:<22}{mean:>14.4e}{worst:>12.3e}{pub_s:>12}{secs:>10.1f}")


if __name__ == "__main__":
    main()
