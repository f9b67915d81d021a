"""Command line entry point: ``mesu <subcommand> ...``.

Exit status 0 on success, 1 when input fails validation (bad arguments,
malformed files, a solution that violates the model), 2 when a run fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .checker import check_trace
from .exact import (MilpModel, build_milp, exact_plan, read_solution, trace_to_solution, verify_solution,
                    write_model, write_solution)
from .harness import Scenario, SweepSpec, generate_topology, run_sweep, write_csv
from .planner import ALGORITHMS, metrics, plan

OK, INVALID, FAILED = 0, 1, 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _scenario(args) -> Scenario:
    sc = Scenario.load(args.scenario)
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    return sc


def _say(args, *parts) -> None:
    if not args.quiet:
        print(*parts)


def cmd_gen_topology(args) -> int:
    topo = generate_topology(args.spec, seed=args.seed or 0)
    if args.out:
        with open(args.out, "w") as fh:
            topo.dump(fh)
        _say(args, f"wrote {args.out}: {len(topo.nodes)} nodes, {len(topo.links)} links")
    else:
        topo.dump(sys.stdout)
    return OK


def cmd_plan(args) -> int:
    sc = _scenario(args)
    inst = sc.materialize()
    trace = plan(inst, args.algo)
    errors = check_trace(trace, inst)
    if errors:
        for e in errors:
            print(f"check: {e}", file=sys.stderr)
        return FAILED
    if args.out_trace:
        with open(args.out_trace, "w") as fh:
            fh.write(trace.to_json())
    if args.out_assign:
        with open(args.out_assign, "w") as fh:
            for i, rec in enumerate(trace.records):
                rec.assignment.dump_csv(fh, write_header=i == 0)
    m = metrics(trace, inst.topology)
    _say(args, f"{args.algo}: gamma_bar={m.gamma_bar:.4f} gamma_bar_pct={m.gamma_bar_pct:.2f} "
               f"S_hat={m.S_hat:.2f} M_hat={m.M_hat:.2f} C_util={m.C_util:.2f} dB_hat={m.dB_hat:.2f}")
    return OK


def cmd_compare(args) -> int:
    sc = _scenario(args)
    inst = sc.materialize()
    algos = args.algos or list(sc.algorithms)
    _say(args, f"{'algo':>4} {'gamma%':>8} {'S_hat':>7} {'M_hat':>7} {'C_util':>7} {'dB_hat':>7} {'ms':>8}")
    status = OK
    for a in algos:
        trace = plan(inst, a)
        if check_trace(trace, inst):
            status = FAILED
        m = metrics(trace, inst.topology)
        _say(args, f"{a:>4} {m.gamma_bar_pct:8.2f} {m.S_hat:7.2f} {m.M_hat:7.2f} {m.C_util:7.2f} "
                   f"{m.dB_hat:7.2f} {trace.runtime_ms:8.1f}")
    return status


def cmd_sweep(args) -> int:
    sweep = SweepSpec.load(args.sweep)
    if args.seed is not None:
        sweep = replace(sweep, base=replace(sweep.base, seed=args.seed))
    rows = run_sweep(sweep, jobs=args.jobs)
    if args.out_csv:
        with open(args.out_csv, "w") as fh:
            write_csv(rows, sweep.algos, fh)
        _say(args, f"wrote {args.out_csv}: {len(rows)} runs")
    else:
        write_csv(rows, sweep.algos, sys.stdout)
    failed = [r for r in rows if r.status != "ok"]
    return FAILED if failed else OK


def cmd_export_milp(args) -> int:
    inst = _scenario(args).materialize()
    mdl = build_milp(inst)
    meta = write_model(mdl, args.out_lp)
    _say(args, f"wrote {args.out_lp} and {meta}: {len(mdl.variables)} variables, {len(mdl.rows)} constraints")
    if args.solution_from:
        trace = plan(inst, args.solution_from)
        values = trace_to_solution(trace, inst, mdl)
        with open(args.out_solution, "w") as fh:
            write_solution(values, fh)
        _say(args, f"wrote {args.out_solution} from the {args.solution_from} plan")
    return OK


def cmd_oracle(args) -> int:
    inst = _scenario(args).materialize()
    res = exact_plan(inst)
    errors = check_trace(res.witness, inst)
    if errors:
        for e in errors:
            print(f"check: {e}", file=sys.stderr)
        return FAILED
    _say(args, f"optimum: gamma_bar={res.gamma_bar:.4f} gamma_bar_pct={res.gamma_bar_pct:.2f} "
               f"(per stage {res.gammas}, {res.nodes_explored} flow checks)")
    for t, acts in enumerate(res.actions, start=1):
        _say(args, f"stage {t}: " + (", ".join(f"{k} {s} x{m}" for k, s, m in acts) or "no action"))
    for a in args.algos or ():
        trace = plan(inst, a)
        _say(args, f"{a}: gamma_bar={trace.gamma_bar:.4f} gap={res.gamma_bar - trace.gamma_bar:.4f}")
    return OK


def cmd_verify(args) -> int:
    with open(args.meta) as fh:
        mdl = MilpModel.from_meta(json.load(fh))
    with open(args.solution) as fh:
        values = read_solution(fh)
    report = verify_solution(mdl, values, tol=args.tol)
    if not args.quiet:
        sys.stdout.write(report.text())
    return OK if report.ok else INVALID


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mesu", description="Multi-stage edge server deployment and upgrade planning.")
    p.add_argument("--seed", type=int, default=None, help="override the scenario / generator seed")
    p.add_argument("--quiet", action="store_true", help="suppress informational output")
    # the global flags are also accepted after the subcommand
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-topology", parents=[common], help="generate an xNyE topology")
    g.add_argument("spec")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen_topology)

    g = sub.add_parser("plan", parents=[common], help="run one algorithm on a scenario")
    g.add_argument("scenario")
    g.add_argument("--algo", choices=ALGORITHMS, default="H")
    g.add_argument("--out-trace")
    g.add_argument("--out-assign", help="per-fraction CSV of every stage")
    g.set_defaults(func=cmd_plan)

    g = sub.add_parser("compare", parents=[common], help="run several algorithms on a scenario")
    g.add_argument("scenario")
    g.add_argument("--algos", nargs="+", choices=ALGORITHMS)
    g.set_defaults(func=cmd_compare)

    g = sub.add_parser("sweep", parents=[common], help="run a parameter sweep")
    g.add_argument("sweep")
    g.add_argument("--out-csv")
    g.add_argument("--jobs", type=int, default=1)
    g.set_defaults(func=cmd_sweep)

    g = sub.add_parser("export-milp", parents=[common], help="write the MILP of a scenario as an LP file")
    g.add_argument("scenario")
    g.add_argument("--out-lp", required=True)
    g.add_argument("--solution-from", choices=ALGORITHMS,
                   help="also write the given algorithm's plan as a MILP solution")
    g.add_argument("--out-solution", default="solution.csv")
    g.set_defaults(func=cmd_export_milp)

    g = sub.add_parser("oracle", parents=[common], help="exact optimum of a small scenario")
    g.add_argument("scenario")
    g.add_argument("--algos", nargs="+", choices=ALGORITHMS)
    g.set_defaults(func=cmd_oracle)

    g = sub.add_parser("verify", parents=[common], help="check a MILP solution against exported model metadata")
    g.add_argument("meta")
    g.add_argument("solution")
    g.add_argument("--tol", type=float, default=1e-6)
    g.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"mesu: {exc}", file=sys.stderr)
        return INVALID
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"mesu: {exc}", file=sys.stderr)
        return INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"mesu: run failed: {exc!r}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
