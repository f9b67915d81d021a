"""Heuristics against the exhaustive oracle on networks small enough to enumerate."""
import argparse
import statistics
import sys

from mesu.exact import exact_plan
from mesu.harness import Scenario
from mesu.planner import ALGORITHMS, plan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--topologies", nargs="+", default=["4N3E", "5N4E", "5N5E", "5N6E"])
    ap.add_argument("--tasks", type=int, nargs="+", default=[5, 8])
    ap.add_argument("--stages", type=int, default=2)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    print(f"{'network':<8} {'R1':>3} {'oracle':>7} " + " ".join(f"{a:>7}" for a in ALGORITHMS))
    for spec in args.topologies:
        for n in args.tasks:
            best, got = [], {a: [] for a in ALGORITHMS}
            for seed in range(args.seeds):
                inst = Scenario(topology=spec, stages=args.stages, initial_tasks=n, max_rpacks=2,
                                seed=seed).materialize()
                best.append(exact_plan(inst).gamma_bar_pct)
                for a in ALGORITHMS:
                    got[a].append(plan(inst, a).gamma_bar_pct)
            print(f"{spec:<8} {n:>3} {statistics.fmean(best):7.2f} "
                  + " ".join(f"{statistics.fmean(got[a]):7.2f}" for a in ALGORITHMS))
    return 0


if __name__ == "__main__":
    sys.exit(main())
