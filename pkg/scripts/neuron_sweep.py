"""Width sweeps on the Burgers benchmark: vary k with p fixed, then p with k fixed.

    python scripts/neuron_sweep.py --k-fixed 30 --p-values 10 20 40 60 100 200
"""
import argparse

from rann_deeponet.bench import SCALES, ExperimentConfig, neuron_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", choices=SCALES, default="desk")
    ap.add_argument("--k-fixed", type=int, default=30)
    ap.add_argument("--p-fixed", type=int, default=60)
    ap.add_argument("--p-values", type=int, nargs="+", default=[10, 20, 40, 60, 100, 200])
    ap.add_argument("--k-values", type=int, nargs="+", default=[10, 20, 40, 80, 160])
    ap.add_argument("--out", default="runs/sweep")
    ap.add_argument("--data-dir", default="data/burgers_desk")
    args = ap.parse_args()

    base = ExperimentConfig.preset("burgers", args.scale, data_dir=args.data_dir)
    for axis, fixed, values in (("p", {"k": args.k_fixed}, args.p_values),
                                ("k", {"p": args.p_fixed}, args.k_values)):
        rows = neuron_sweep(base.replace(**fixed), axis, values, f"{args.out}/sweep_{axis}.csv")
        other = next(iter(fixed.items()))
        print(f"# sweep over {axis} with {other[0]} = {other[1]}")
        for r in rows:
            print(f"{axis} = {r['value']:>4d}   mean rel l2 {r['mean_rel_l2']:.4e}   "
                  f"train {r['train_seconds']:.1f}s")


if __name__ == "__main__":
    main()
