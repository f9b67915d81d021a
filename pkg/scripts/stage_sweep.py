"""Effect of the number of planning stages T, every run evaluated over the same stages.

Runs with T below the evaluation length plan the missing stages through
the prediction horizon (H) or not at all (HO and the baselines).
"""
import argparse
import sys

from mesu.harness import Scenario, SweepSpec, mean_gamma, run_sweep, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--topology", default="25N40E")
    ap.add_argument("--eval-stages", type=int, default=5)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--algos", nargs="+", default=["H", "HO"])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    sweep = SweepSpec(axis="stages", values=tuple(range(1, args.eval_stages + 1)),
                      base=Scenario(topology=args.topology), repetitions=args.seeds,
                      algorithms=tuple(args.algos), eval_stages=args.eval_stages)
    rows = run_sweep(sweep, jobs=args.jobs)
    means = mean_gamma(rows)
    print("T  " + " ".join(f"{a:>7}" for a in args.algos))
    for v in sweep.values:
        print(f"{int(v):<2} " + " ".join(f"{means.get((v, a), float('nan')):7.2f}" for a in args.algos))
    if args.out:
        with open(args.out, "w") as fh:
            write_csv(rows, args.algos, fh)
    return 0 if all(r.status == "ok" for r in rows) else 2


if __name__ == "__main__":
    sys.exit(main())
