"""Mean Γ̄ and resource metrics of every algorithm over a few link densities."""
import argparse
import statistics
import sys

from mesu.harness import Scenario
from mesu.planner import ALGORITHMS, metrics, plan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--topologies", nargs="+", default=["25N30E", "25N40E", "25N50E"])
    ap.add_argument("--stages", type=int, default=3)
    ap.add_argument("--coverage", type=float, default=75.0)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    print(f"{'network':<9} {'algo':<4} {'gamma%':>7} {'S^':>6} {'M^':>6} {'Cutil':>6} {'dB^':>6}")
    for spec in args.topologies:
        acc = {a: [] for a in ALGORITHMS}
        for seed in range(args.seeds):
            inst = Scenario(topology=spec, stages=args.stages, coverage_pct=args.coverage,
                            seed=seed).materialize()
            for a in ALGORITHMS:
                acc[a].append(metrics(plan(inst, a), inst.topology))
        for a in ALGORITHMS:
            ms = acc[a]
            cols = [statistics.fmean(getattr(m, f) for m in ms)
                    for f in ("gamma_bar_pct", "S_hat", "M_hat", "C_util", "dB_hat")]
            print(f"{spec:<9} {a:<4} " + " ".join(f"{c:6.2f}" for c in cols))
    return 0


if __name__ == "__main__":
    sys.exit(main())
