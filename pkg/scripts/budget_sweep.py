"""Satisfied-task ratio against total budget, B(x%) for x in 20..100."""
import argparse
import sys

from mesu.harness import Scenario, SweepSpec, mean_gamma, run_sweep, write_csv
from mesu.planner import ALGORITHMS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--topology", default="25N40E")
    ap.add_argument("--stages", type=int, default=3)
    ap.add_argument("--coverage", type=float, nargs="+", default=[20, 40, 60, 80, 100])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", help="CSV destination")
    args = ap.parse_args()

    sweep = SweepSpec(axis="budget", values=tuple(args.coverage),
                      base=Scenario(topology=args.topology, stages=args.stages), repetitions=args.seeds)
    rows = run_sweep(sweep, jobs=args.jobs)
    means = mean_gamma(rows)
    print("budget% " + " ".join(f"{a:>7}" for a in ALGORITHMS))
    for v in sweep.values:
        print(f"{v:7.0f} " + " ".join(f"{means.get((v, a), float('nan')):7.2f}" for a in ALGORITHMS))
    if args.out:
        with open(args.out, "w") as fh:
            write_csv(rows, ALGORITHMS, fh)
    return 0 if all(r.status == "ok" for r in rows) else 2


if __name__ == "__main__":
    sys.exit(main())
