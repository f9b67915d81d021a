"""Ground truth for small instances.

Two independent routes to the optimum: a MILP model (emitted as LP text
for an external solver, with a numeric solution verifier) and a
brute-force planner that enumerates every affordable deploy/upgrade
sequence and solves each stage's task assignment as a transportation
problem.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import TextIO

from .flow import transport
from .infrastructure import DEPLOY, MONEY_EPS, UPGRADE, SpendRecord
from .offload import DEADLINE_RTOL, Fraction, StageAssignment, max_cloud_fraction, within
from .planner import ActionRecord, Instance, PlanTrace, StageRecord

GB = 1e9  # the LP works in Gb so coefficients stay near unit scale
META_SCHEMA = "mesu.milp/1"
VERIFY_TOL = 1e-6


# -- model ---------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str
    kind: str  # binary | integer | continuous
    lb: float
    ub: float


@dataclass(frozen=True)
class Row:
    id: str
    terms: tuple[tuple[str, float], ...]
    sense: str  # <=, >=, =
    rhs: float


@dataclass
class MilpModel:
    variables: list[Var] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    objective: list[tuple[str, float]] = field(default_factory=list)
    big_m: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    shape: dict = field(default_factory=dict)

    def var(self, name: str, kind: str, lb: float, ub: float) -> str:
        self.variables.append(Var(name, kind, float(lb), float(ub)))
        return name

    def row(self, rid: str, terms, sense: str, rhs: float) -> None:
        terms = tuple((n, float(c)) for n, c in terms if c != 0)
        self.rows.append(Row(rid, terms, sense, float(rhs)))

    def to_meta(self) -> dict:
        return {
            "schema": META_SCHEMA,
            "shape": self.shape,
            "objective": [[n, c] for n, c in self.objective],
            "variables": [[v.name, v.kind, v.lb, v.ub] for v in self.variables],
            "rows": [[r.id, r.sense, r.rhs, [[n, c] for n, c in r.terms]] for r in self.rows],
        }

    @classmethod
    def from_meta(cls, data: dict) -> "MilpModel":
        if data.get("schema") != META_SCHEMA:
            raise ValueError(f"unsupported model metadata schema {data.get('schema')!r}")
        m = cls(shape=data.get("shape", {}))
        m.objective = [(n, float(c)) for n, c in data["objective"]]
        m.variables = [Var(n, k, float(lb), float(ub)) for n, k, lb, ub in data["variables"]]
        m.rows = [Row(i, tuple((n, float(c)) for n, c in terms), s, float(rhs))
                  for i, s, rhs, terms in data["rows"]]
        return m


def closed_form_counts(stages: int, nodes: int, servers: list[int], tasks: list[int]) -> tuple[int, int]:
    """Closed-form variable and constraint counts for ``stages`` stages.

    ``servers[t]`` and ``tasks[t]`` are the candidate-server (cloud
    included) and task counts of stage ``t``.
    """
    n_vars = nodes * stages + sum(s + 2 * (s * r + r) for s, r in zip(servers, tasks))
    n_rows = stages + nodes * stages + sum(2 * r + 3 * s + 3 * s * r - 1 for s, r in zip(servers, tasks))
    return n_vars, n_rows


class ModelTooLarge(ValueError):
    pass


def build_milp(inst: Instance, candidates=None, max_cells: int = 200_000) -> MilpModel:
    """MILP of the planning stages of ``inst`` on their actual demand.

    ``candidates`` restricts which APs may host servers (the cloud is
    always a candidate); by default every AP is one.
    """
    topo = inst.topology
    cloud = topo.cloud
    nodes = sorted(topo.nodes)
    T = inst.stages
    work = inst.workloads[:T]
    if len(nodes) * sum(len(w.tasks) for w in work) > max_cells:
        raise ModelTooLarge(f"model with {len(nodes)} nodes and {sum(len(w.tasks) for w in work)} "
                            f"tasks exceeds the {max_cells}-cell limit")
    aps = [s for s in nodes if s != cloud]
    cand = sorted(set(aps if candidates is None else candidates))
    if not set(cand) <= set(aps):
        raise ValueError("candidate servers must be access points")
    S = cand + [cloud]
    M0 = {s: inst.initial.get(s, 0) for s in aps}
    d0 = {s: 1 if M0[s] > 0 else 0 for s in aps}
    Mmax = inst.max_rpacks
    Cp = inst.capacity / GB
    costs = inst.costs
    model = inst.model
    mdl = MilpModel()
    mdl.shape = {"stages": T, "nodes": len(nodes), "servers": [len(S)] * T,
                 "tasks": [len(w.tasks) for w in work], "cloud": cloud, "candidates": cand}
    mdl.notes = [
        "objective: average satisfied-task count over the planning stages",
        "c20: cumulative spend up to stage t within t*B/T; the infrastructure cost is charged on"
        " the increment d_t_s - d_(t-1)_s only, not on every stage a server exists",
        "c22: cloud share bounded by the largest in-deadline cloud fraction",
        "c23/c24: the product of rpack count and deployment flag is linearized as two rows,"
        " capacity sum(b) <= C_p*(M0 + sum m) and gating b <= M_max*C_p*d",
        "c29: delay row uses the affine form slope*b + offset with a per (t,k,s) big-M",
        "sizes and capacities in Gb, delays in seconds",
    ]

    def dname(t, s):
        return f"d_{t}_{s}"

    def mname(t, s):
        return f"m_{t}_{s}"

    # variables
    for t in range(1, T + 1):
        for s in nodes:
            if s == cloud or s in cand:
                lb, ub = 0, 1
            else:
                lb = ub = d0[s]
            mdl.var(dname(t, s), "binary", lb, ub)
        for s in S:
            mdl.var(mname(t, s), "integer", 0, 0 if s == cloud else Mmax - M0[s])
        tasks = work[t - 1].tasks
        for task in tasks:
            size = task.size / GB
            for s in S:
                mdl.var(f"b_{t}_{task.id}_{s}", "continuous", 0, size)
            mdl.var(f"bc_{t}_{task.id}", "continuous", 0, size)
            mdl.var(f"g_{t}_{task.id}", "binary", 0, 1)
            for s in S:
                mdl.var(f"g_{t}_{task.id}_{s}", "binary", 0, 1)
        for task in tasks:
            mdl.objective.append((f"g_{t}_{task.id}", 1.0 / T))
    # rows
    for t in range(1, T + 1):
        tasks = work[t - 1].tasks
        # (20) cumulative budget with increment charging
        terms: dict[str, float] = {}
        rhs = t * inst.budget / T
        for tau in range(1, t + 1):
            for s in aps:
                terms[dname(tau, s)] = terms.get(dname(tau, s), 0.0) + costs.infra(tau)
                if tau == 1:
                    rhs += costs.infra(1) * d0[s]
                else:
                    terms[dname(tau - 1, s)] = terms.get(dname(tau - 1, s), 0.0) - costs.infra(tau)
            for s in cand:
                terms[mname(tau, s)] = terms.get(mname(tau, s), 0.0) + costs.rpack(tau)
        mdl.row(f"c20_{t}", sorted(terms.items(), key=lambda kv: _var_order(kv[0])), "<=", rhs)
        for task in tasks:
            size = task.size / GB
            # (21) fractions cover the task
            mdl.row(f"c21_{t}_{task.id}", [(f"b_{t}_{task.id}_{s}", 1.0) for s in S]
                    + [(f"bc_{t}_{task.id}", 1.0)], "=", size)
            # (22) cloud share clamp
            bound = max_cloud_fraction(task, model) / GB
            mdl.row(f"c22_{t}_{task.id}", [(f"bc_{t}_{task.id}", 1.0)], "<=", min(size, bound))
        for s in cand:
            # (23) capacity
            terms = [(f"b_{t}_{task.id}_{s}", 1.0) for task in tasks]
            terms += [(mname(tau, s), -Cp) for tau in range(1, t + 1)]
            mdl.row(f"c23_{t}_{s}", terms, "<=", Cp * M0[s])
        for task in tasks:
            for s in S:
                # (24) fractions only on deployed servers
                gate = Mmax * Cp if s != cloud else task.size / GB
                mdl.row(f"c24_{t}_{task.id}_{s}", [(f"b_{t}_{task.id}_{s}", 1.0), (dname(t, s), -gate)], "<=", 0.0)
        for s in nodes:
            # (25) a deployed server stays deployed
            if t == 1:
                rhs = d0.get(s, 0)  # the cloud flag is free; switching it on costs nothing
                mdl.row(f"c25_{t}_{s}", [(dname(t, s), 1.0)], ">=", rhs)
            else:
                mdl.row(f"c25_{t}_{s}", [(dname(t, s), 1.0), (dname(t - 1, s), -1.0)], ">=", 0.0)
        for s in S:
            # (26) rpack cap
            cap = 0 if s == cloud else Mmax - M0[s]
            mdl.row(f"c26_{t}_{s}", [(mname(tau, s), 1.0) for tau in range(1, t + 1)], "<=", cap)
        for s in S:
            # (27) rpacks never removed
            mdl.row(f"c27_{t}_{s}", [(mname(t, s), 1.0)], ">=", 0.0)
        for task in tasks:
            for s in S:
                # (29) delay of each fraction, relaxed by big-M when not counted
                slope, offset = model.coefficients(task.origin, s)
                a = slope * GB
                big = model.delay(task.origin, s, task.size) + 1.0
                mdl.big_m[f"{t}_{task.id}_{s}"] = big
                terms = [(f"b_{t}_{task.id}_{s}", a)]
                if s == cloud:
                    terms.append((f"bc_{t}_{task.id}", a))
                terms.append((f"g_{t}_{task.id}_{s}", big))
                mdl.row(f"c29_{t}_{task.id}_{s}", terms, "<=", max(0.0, task.limit - offset) + big)
        for task in tasks:
            for s in S:
                # (30) a task counts only if every fraction meets its limit
                mdl.row(f"c30_{t}_{task.id}_{s}", [(f"g_{t}_{task.id}", 1.0), (f"g_{t}_{task.id}_{s}", -1.0)],
                        "<=", 0.0)
    return mdl


_PREFIX_ORDER = {"d": 0, "m": 1, "b": 2, "bc": 3, "g": 4}


def _var_order(name: str):
    parts = name.split("_")
    return (_PREFIX_ORDER.get(parts[0], 9), len(parts), [int(p) for p in parts[1:]])


# -- LP text --------------------------------------------------------------------

def _num(x: float) -> str:
    return "%.17g" % x


def _expr(terms, width: int = 6) -> list[str]:
    chunks = []
    for i, (name, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        piece = f"{sign} {name}" if mag == 1 else f"{sign} {_num(mag)} {name}"
        if i == 0 and sign == "+":
            piece = piece[2:]
        chunks.append(piece)
    lines = []
    for i in range(0, len(chunks), width):
        lines.append(" ".join(chunks[i:i + width]))
    return lines


def emit_lp(mdl: MilpModel, fh: TextIO) -> None:
    """Write ``mdl`` in CPLEX LP format; output is a pure function of the model."""
    fh.write("\\ multi-stage edge server deploy/upgrade model\n")
    for note in mdl.notes:
        fh.write(f"\\ {note}\n")
    fh.write("Maximize\n")
    if mdl.objective:
        lines = _expr(mdl.objective)
        fh.write(f" obj: {lines[0]}\n")
        for line in lines[1:]:
            fh.write(f"   {line}\n")
    else:
        fh.write(" obj:\n")
    fh.write("Subject To\n")
    ops = {"<=": "<=", ">=": ">=", "=": "="}
    for r in mdl.rows:
        lines = _expr(r.terms) if r.terms else None
        if lines is None:
            continue
        fh.write(f" {r.id}: {lines[0]}")
        for line in lines[1:]:
            fh.write(f"\n   {line}")
        fh.write(f" {ops[r.sense]} {_num(r.rhs)}\n")
    if mdl.variables:
        fh.write("Bounds\n")
        for v in mdl.variables:
            if v.lb == v.ub:
                fh.write(f" {v.name} = {_num(v.lb)}\n")
            else:
                fh.write(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}\n")
        binaries = [v.name for v in mdl.variables if v.kind == "binary"]
        generals = [v.name for v in mdl.variables if v.kind == "integer"]
        if binaries:
            fh.write("Binaries\n")
            for i in range(0, len(binaries), 8):
                fh.write(" " + " ".join(binaries[i:i + 8]) + "\n")
        if generals:
            fh.write("Generals\n")
            for i in range(0, len(generals), 8):
                fh.write(" " + " ".join(generals[i:i + 8]) + "\n")
    fh.write("End\n")


def lp_text(mdl: MilpModel) -> str:
    import io
    buf = io.StringIO()
    emit_lp(mdl, buf)
    return buf.getvalue()


def write_model(mdl: MilpModel, lp_path) -> str:
    """Write the LP file and its ``.lp-meta`` companion; returns the meta path."""
    with open(lp_path, "w") as fh:
        emit_lp(mdl, fh)
    meta_path = str(lp_path) + "-meta" if str(lp_path).endswith(".lp") else str(lp_path) + ".lp-meta"
    with open(meta_path, "w") as fh:
        json.dump(mdl.to_meta(), fh, sort_keys=True)
        fh.write("\n")
    return meta_path


# -- solution checking ----------------------------------------------------------------

@dataclass
class VerifyReport:
    lines: list[tuple[str, float, bool]]
    objective: float

    @property
    def ok(self) -> bool:
        return all(passed for _, _, passed in self.lines)

    def failures(self) -> list[str]:
        return [cid for cid, _, passed in self.lines if not passed]

    def text(self) -> str:
        out = [f"{cid} {res:.3e} {'PASS' if passed else 'FAIL'}" for cid, res, passed in self.lines]
        out.append(f"objective {self.objective:.9g} {'PASS' if self.ok else 'FAIL'}")
        return "\n".join(out) + "\n"


def verify_solution(mdl: MilpModel, values: dict[str, float], tol: float = VERIFY_TOL) -> VerifyReport:
    """Residual of every row, bound and integrality requirement; PASS iff all within ``tol``."""
    for v in mdl.variables:
        if v.name not in values:
            raise KeyError(f"solution is missing variable {v.name}")
    lines = []
    for r in mdl.rows:
        lhs = math.fsum(c * values[n] for n, c in r.terms)
        if r.sense == "<=":
            res = max(0.0, lhs - r.rhs)
        elif r.sense == ">=":
            res = max(0.0, r.rhs - lhs)
        else:
            res = abs(lhs - r.rhs)
        lines.append((r.id, res, res <= tol))
    for v in mdl.variables:
        x = values[v.name]
        res = max(0.0, v.lb - x, x - v.ub)
        lines.append((f"bound_{v.name}", res, res <= tol))
        if v.kind in ("binary", "integer"):
            res = abs(x - round(x))
            lines.append((f"int_{v.name}", res, res <= tol))
    obj = math.fsum(c * values[n] for n, c in mdl.objective)
    return VerifyReport(lines, obj)


def read_solution(fh: TextIO) -> dict[str, float]:
    out = {}
    for row in csv.reader(fh):
        if not row or row[0].startswith("#") or row[0] == "variable":
            continue
        if len(row) != 2:
            raise ValueError(f"solution row {row!r} is not 'variable,value'")
        out[row[0].strip()] = float(row[1])
    return out


def write_solution(values: dict[str, float], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["variable", "value"])
    for name in sorted(values, key=_var_order):
        writer.writerow([name, repr(float(values[name]))])


def trace_to_solution(trace: PlanTrace, inst: Instance, mdl: MilpModel | None = None) -> dict[str, float]:
    """MILP variable values equivalent to the planning stages of ``trace``."""
    topo = inst.topology
    cloud = topo.cloud
    cand = (mdl.shape["candidates"] if mdl is not None else list(topo.aps))
    S = list(cand) + [cloud]
    values: dict[str, float] = {}
    prev = {s: inst.initial.get(s, 0) for s in topo.aps}
    for rec in trace.records[:inst.stages]:
        t = rec.stage
        now = {s: rec.rpacks.get(s, 0) for s in topo.aps}
        for s in topo.nodes:
            values[f"d_{t}_{s}"] = 1.0 if s == cloud or now.get(s, 0) > 0 else 0.0
        for s in S:
            values[f"m_{t}_{s}"] = 0.0 if s == cloud else float(now[s] - prev[s])
        for s in topo.aps:
            if s not in cand and now[s] != prev[s]:
                raise ValueError(f"trace installs rpacks on non-candidate node {s}")
        prev = now
        frac = {}
        for f in rec.assignment.fractions:
            frac.setdefault(f.task, {})[f.server] = f.size / GB
        for task in rec.tasks:
            k = task.id
            parts = frac.get(k, {})
            ok = k in rec.assignment.satisfied
            for s in S:
                values[f"b_{t}_{k}_{s}"] = parts.get(s, 0.0) if s != cloud else 0.0
            cloud_bits = parts.get(cloud, 0.0)
            if ok:
                values[f"bc_{t}_{k}"] = cloud_bits
            else:
                values[f"bc_{t}_{k}"] = 0.0
                values[f"b_{t}_{k}_{cloud}"] = cloud_bits
            for s in parts:
                if s != cloud and s not in cand:
                    raise ValueError(f"trace places task {k} on non-candidate node {s}")
            g = 1.0 if ok else 0.0
            values[f"g_{t}_{k}"] = g
            for s in S:
                values[f"g_{t}_{k}_{s}"] = g
    return values


# -- brute-force oracle -------------------------------------------------------------

class OracleGuardError(ValueError):
    pass


@dataclass(frozen=True)
class OracleGuard:
    max_nodes: int = 5
    max_stages: int = 2
    max_tasks: int = 8
    max_rpacks: int = 2

    def check(self, inst: Instance) -> None:
        problems = []
        if len(inst.topology.nodes) > self.max_nodes:
            problems.append(f"{len(inst.topology.nodes)} nodes > {self.max_nodes}")
        if inst.stages > self.max_stages:
            problems.append(f"{inst.stages} stages > {self.max_stages}")
        if len(inst.workloads[0].tasks) > self.max_tasks:
            problems.append(f"{len(inst.workloads[0].tasks)} initial tasks > {self.max_tasks}")
        if inst.max_rpacks > self.max_rpacks:
            problems.append(f"M_max {inst.max_rpacks} > {self.max_rpacks}")
        if problems:
            raise OracleGuardError("instance too large for the exact oracle: " + "; ".join(problems))


@dataclass
class StageOptimum:
    satisfied: frozenset[int]
    cloud_whole: frozenset[int]
    edge_flow: dict[tuple[int, int], float]  # (task, server) -> bits

    @property
    def count(self) -> int:
        return len(self.satisfied)


@dataclass
class ExactResult:
    gamma_bar: float
    gamma_bar_pct: float
    gammas: list[int]
    actions: list[list[tuple[str, int, int]]]
    witness: PlanTrace
    nodes_explored: int


class StageSolver:
    """Maximum satisfiable task set of one stage for a given rpack vector."""

    def __init__(self, inst: Instance, tasks):
        self.inst = inst
        self.tasks = list(tasks)
        model = inst.model
        self.cloud_whole = frozenset(t.id for t in self.tasks
                                     if within(model.delay(t.origin, model.cloud, t.size), t.limit))
        self.demand = {}
        self.reach: dict[int, dict[int, float]] = {}
        for t in self.tasks:
            if t.id in self.cloud_whole:
                continue
            self.demand[t.id] = t.size - max_cloud_fraction(t, model)
            slack = DEADLINE_RTOL * max(1.0, t.limit)
            self.reach[t.id] = {s: min(self.demand[t.id], model.max_bits(t.origin, s, t.limit + slack))
                                for s in inst.topology.aps}
        self.explored = 0
        self._memo: dict[tuple, StageOptimum] = {}

    def solve(self, rpacks: tuple[tuple[int, int], ...]) -> StageOptimum:
        if rpacks in self._memo:
            return self._memo[rpacks]
        caps = {s: m * self.inst.capacity * (1 + 1e-11) for s, m in rpacks if m > 0}
        arcs_all = {(k, s): c for k, row in self.reach.items() for s, c in row.items() if s in caps and c > 0}
        order = sorted((k for k in self.demand
                        if sum(arcs_all.get((k, s), 0.0) for s in caps) >= self.demand[k] * (1 - 1e-12)),
                       key=lambda k: (self.demand[k], k))
        best: list = [[], {}]

        def feasible(chosen):
            self.explored += 1
            dem = {k: self.demand[k] for k in chosen}
            arcs = {key: c for key, c in arcs_all.items() if key[0] in dem}
            ok, _, _, flow = transport(dem, caps, arcs)
            return ok, flow

        def dfs(i, chosen, flow):
            if len(chosen) > len(best[0]):
                best[0], best[1] = list(chosen), flow
            if i == len(order) or len(chosen) + len(order) - i <= len(best[0]):
                return
            k = order[i]
            ok, new_flow = feasible(chosen + [k])
            if ok:
                dfs(i + 1, chosen + [k], new_flow)
            dfs(i + 1, chosen, flow)

        dfs(0, [], {})
        out = StageOptimum(self.cloud_whole | frozenset(best[0]), self.cloud_whole, best[1])
        self._memo[rpacks] = out
        return out


def _stage_options(rp: dict[int, int], aps, max_rpacks: int):
    """Per-AP action choices: None or (kind, m)."""
    per = []
    for s in aps:
        have = rp.get(s, 0)
        opts = [None]
        if have == 0:
            opts += [(DEPLOY, m) for m in range(1, max_rpacks + 1)]
        else:
            opts += [(UPGRADE, m) for m in range(1, max_rpacks - have + 1)]
        per.append(opts)
    return per


def exact_plan(inst: Instance, guard: OracleGuard | None = OracleGuard()) -> ExactResult:
    """Optimal average satisfied-task count by exhaustive decision enumeration."""
    if guard is not None:
        guard.check(inst)
    aps = list(inst.topology.aps)
    costs = inst.costs
    T = inst.stages
    solvers = [StageSolver(inst, w.tasks) for w in inst.workloads]
    best = {"value": -1, "plan": None}

    def key(rp):
        return tuple(sorted((s, m) for s, m in rp.items() if m > 0))

    def tail_value(t, rp):
        # stages after the planning horizon run on the final infrastructure
        return sum(solvers[u - 1].solve(key(rp)).count for u in range(t, inst.eval_stages + 1))

    def recurse(t, rp, carry, acc, plan_so_far):
        if t > T:
            total = acc + tail_value(t, rp)
            if total > best["value"]:
                best["value"], best["plan"] = total, list(plan_so_far)
            return
        available = inst.budget / T + carry
        per = _stage_options(rp, aps, inst.max_rpacks)
        for combo in itertools.product(*per):
            spent = 0.0
            for s, opt in zip(aps, combo):
                if opt is None:
                    continue
                kind, m = opt
                spent += costs.deploy(m, t) if kind == DEPLOY else costs.upgrade(m, t)
            if spent > available + MONEY_EPS:
                continue
            new = dict(rp)
            acts = []
            for s, opt in zip(aps, combo):
                if opt is not None:
                    new[s] = new.get(s, 0) + opt[1]
                    acts.append((opt[0], s, opt[1]))
            gain = solvers[t - 1].solve(key(new)).count
            recurse(t + 1, new, max(available - spent, 0.0), acc + gain, plan_so_far + [acts])

    recurse(1, {s: m for s, m in inst.initial.items() if m > 0}, 0.0, 0, [])
    witness = _witness(inst, best["plan"], solvers)
    gammas = [r.gamma for r in witness.records]
    return ExactResult(
        gamma_bar=sum(gammas) / len(gammas),
        gamma_bar_pct=witness.gamma_bar_pct,
        gammas=gammas,
        actions=best["plan"],
        witness=witness,
        nodes_explored=sum(s.explored for s in solvers),
    )


def _stage_assignment(inst: Instance, stage: int, tasks, opt: StageOptimum) -> tuple[StageAssignment, dict[int, float]]:
    model = inst.model
    cloud = model.cloud
    out = StageAssignment(stage, satisfied=set(opt.satisfied))
    loads: dict[int, float] = {}
    by_task: dict[int, dict[int, float]] = {}
    for (k, s), bits in opt.edge_flow.items():
        by_task.setdefault(k, {})[s] = bits
    for t in tasks:
        if t.id in opt.cloud_whole or t.id not in opt.satisfied:
            out.fractions.append(Fraction(t.id, cloud, t.size, model.delay(t.origin, cloud, t.size)))
            continue
        share = max_cloud_fraction(t, model)
        residual = t.size - share
        parts = by_task.get(t.id, {})
        routed = sum(parts.values())
        if share > 0:
            out.fractions.append(Fraction(t.id, cloud, share, model.delay(t.origin, cloud, share)))
        for s in sorted(parts):
            bits = residual * parts[s] / routed if routed > 0 else 0.0
            out.fractions.append(Fraction(t.id, s, bits, model.delay(t.origin, s, bits)))
            loads[s] = loads.get(s, 0.0) + bits
    out.fractions.sort(key=lambda f: (f.task, f.server))
    return out, loads


def _witness(inst: Instance, plan_actions, solvers) -> PlanTrace:
    costs = inst.costs
    rp = {s: m for s, m in inst.initial.items() if m > 0}
    records = []
    spend = []
    carry = 0.0
    for t in range(1, inst.eval_stages + 1):
        acts = []
        available = spent = 0.0
        if t <= inst.stages:
            available = inst.budget / inst.stages + carry
            remaining = available
            for kind, s, m in plan_actions[t - 1]:
                cost = costs.deploy(m, t) if kind == DEPLOY else costs.upgrade(m, t)
                remaining = max(remaining - cost, 0.0)
                spent += cost
                spend.append(SpendRecord(t, s, kind, m, cost, remaining))
                rp[s] = rp.get(s, 0) + m
                acts.append(ActionRecord(t, kind, s, m, cost, 0, ()))
            carry = available - spent
        key = tuple(sorted((s, m) for s, m in rp.items() if m > 0))
        opt = solvers[t - 1].solve(key)
        tasks = inst.workloads[t - 1].tasks
        assignment, loads = _stage_assignment(inst, t, tasks, opt)
        rec = StageRecord(t, t <= inst.stages, False, t, tasks, assignment, dict(sorted(rp.items())),
                          {s: loads.get(s, 0.0) for s in sorted(rp)}, acts, available, spent, carry)
        records.append(rec)
    return PlanTrace("exact", inst.stages, inst.budget, inst.capacity, inst.max_rpacks, inst.seed,
                     dict(sorted(inst.initial.items())), records, spend)


def edge_set_feasible(inst: Instance, tasks, rpacks: dict[int, int], ids) -> bool:
    """Can tasks ``ids`` all be served at the edge by servers holding ``rpacks``?

    Same transportation test as the oracle: each task's residual after its
    largest in-deadline cloud share must flow to servers within per-arc
    delay limits and server capacities.
    """
    solver = StageSolver(inst, tasks)
    ids = [k for k in ids if k not in solver.cloud_whole]
    caps = {s: m * inst.capacity * (1 + 1e-11) for s, m in rpacks.items() if m > 0}
    dem = {k: solver.demand[k] for k in ids}
    arcs = {(k, s): solver.reach[k][s] for k in ids for s in caps if solver.reach[k][s] > 0}
    return transport(dem, caps, arcs)[0]
