"""Independent re-verification of a plan trace.

Nothing here reuses the planner's bookkeeping: delays are recomputed from
the topology links, prices from the cost model, and loads from the
recorded fractions.
"""
from __future__ import annotations

from collections import defaultdict

from .infrastructure import DEPLOY, UPGRADE
from .planner import Instance, PlanTrace

REL = 1e-9


def _path_inverse_rate_and_prop(inst: Instance, u: int, v: int) -> tuple[float, float]:
    entry = inst.paths[u, v]
    topo = inst.topology
    inv = 0.0
    for a, b in entry.links:
        inv += 1.0 / topo.link(a, b).rate_bps
    distance = sum(topo.link(a, b).length_m for a, b in entry.links)
    return inv, topo.propagation(u, v, distance)


def recompute_delay(inst: Instance, origin: int, server: int, bits: float) -> float:
    fwd_inv, fwd_prop = _path_inverse_rate_and_prop(inst, origin, server)
    back_inv, back_prop = _path_inverse_rate_and_prop(inst, server, origin)
    rate = inst.cloud_rate if server == inst.topology.cloud else inst.edge_rate
    return fwd_prop + bits * fwd_inv + bits / rate + back_prop + inst.result_ratio * bits * back_inv


def _close(a: float, b: float, scale: float = 1.0) -> bool:
    return abs(a - b) <= REL * max(1.0, abs(scale), abs(a), abs(b))


def check_trace(trace: PlanTrace, inst: Instance) -> list[str]:
    """Return every violated condition as a message; empty means the trace is sound."""
    errors: list[str] = []
    cloud = inst.topology.cloud
    aps = set(inst.topology.aps)
    costs = inst.costs
    if len(trace.records) != inst.eval_stages:
        errors.append(f"trace has {len(trace.records)} stages, instance evaluates {inst.eval_stages}")
        return errors
    rpacks = {s: m for s, m in inst.initial.items() if m > 0}
    carry = 0.0
    total_spent = 0.0
    for rec in trace.records:
        t = rec.stage
        tag = f"stage {t}"
        # -- actions, prices and budget
        before = dict(rpacks)
        spent = 0.0
        for a in rec.actions:
            if not rec.planned:
                errors.append(f"{tag}: action on node {a.node} outside the planning stages")
            if a.node not in aps:
                errors.append(f"{tag}: action on non-AP node {a.node}")
                continue
            have = rpacks.get(a.node, 0)
            if a.kind == DEPLOY:
                if have > 0:
                    errors.append(f"{tag}: second deployment on node {a.node}")
                price = costs.infra(t) + a.rpacks * costs.rpack(t)
            elif a.kind == UPGRADE:
                if have == 0:
                    errors.append(f"{tag}: upgrade of node {a.node} without a server")
                price = a.rpacks * costs.rpack(t)
            else:
                errors.append(f"{tag}: unknown action kind {a.kind!r}")
                continue
            if a.rpacks < 1 or have + a.rpacks > inst.max_rpacks:
                errors.append(f"{tag}: node {a.node} would hold {have + a.rpacks} rpacks (max {inst.max_rpacks})")
            if not _close(price, a.cost, price):
                errors.append(f"{tag}: action on node {a.node} priced {a.cost}, expected {price}")
            spent += price
            rpacks[a.node] = have + a.rpacks
        for s, m in before.items():
            if rpacks.get(s, 0) < m:
                errors.append(f"{tag}: node {s} lost rpacks")
        if rec.planned:
            available = inst.budget / inst.stages + carry
            if not _close(rec.budget_available, available, inst.budget):
                errors.append(f"{tag}: available budget {rec.budget_available}, expected {available}")
            if spent > available + REL * max(1.0, inst.budget):
                errors.append(f"{tag}: spent {spent} exceeds available {available}")
            if not _close(rec.spent, spent, inst.budget):
                errors.append(f"{tag}: recorded spend {rec.spent}, recomputed {spent}")
            carry = available - spent
            if not abs(rec.carryover - carry) <= REL * max(1.0, inst.budget):
                errors.append(f"{tag}: carryover {rec.carryover}, expected {carry}")
            total_spent += spent
        if {s: m for s, m in rec.rpacks.items() if m > 0} != rpacks:
            errors.append(f"{tag}: recorded rpacks {rec.rpacks} disagree with actions {rpacks}")
        # -- tasks and fractions
        expected = inst.workloads[t - 1].tasks
        if tuple(rec.tasks) != tuple(expected):
            errors.append(f"{tag}: evaluated tasks differ from the instance workload")
        tasks = {task.id: task for task in rec.tasks}
        by_task = defaultdict(list)
        load = defaultdict(float)
        for f in rec.assignment.fractions:
            if f.task not in tasks:
                errors.append(f"{tag}: fraction of unknown task {f.task}")
                continue
            if f.size < 0:
                errors.append(f"{tag}: negative fraction for task {f.task}")
            if f.server != cloud and rpacks.get(f.server, 0) == 0:
                errors.append(f"{tag}: task {f.task} placed on node {f.server} without a server")
            task = tasks[f.task]
            delay = recompute_delay(inst, task.origin, f.server, f.size)
            if not _close(delay, f.delay, delay):
                errors.append(f"{tag}: stored delay {f.delay} of task {f.task} on {f.server}, recomputed {delay}")
            by_task[f.task].append((f.server, f.size, delay))
            if f.server != cloud:
                load[f.server] += f.size
        for k, task in tasks.items():
            parts = by_task.get(k, [])
            servers = [p[0] for p in parts]
            if len(servers) != len(set(servers)):
                errors.append(f"{tag}: task {k} holds two fractions on one server")
            total = sum(p[1] for p in parts)
            if not _close(total, task.size, task.size):
                errors.append(f"{tag}: fractions of task {k} sum to {total}, size {task.size}")
            if k in rec.assignment.satisfied:
                worst = max((p[2] for p in parts), default=float("inf"))
                # one extra nanosecond absorbs rounding of fractions rebuilt from integer flows
                if worst > task.limit + REL * max(1.0, task.limit) + 1e-9:
                    errors.append(f"{tag}: task {k} marked satisfied with delay {worst} > {task.limit}")
        for s, bits in load.items():
            cap = rpacks.get(s, 0) * inst.capacity
            if bits > cap * (1 + REL) + 1e-6:
                errors.append(f"{tag}: server {s} carries {bits} bits over capacity {cap}")
            if not _close(rec.loads.get(s, 0.0), bits, cap):
                errors.append(f"{tag}: recorded load of {s} is {rec.loads.get(s, 0.0)}, fractions give {bits}")
        if rec.assignment.gamma != len(rec.assignment.satisfied) or not rec.assignment.satisfied <= set(tasks):
            errors.append(f"{tag}: satisfied set inconsistent with the task list")
    if not abs(inst.budget - total_spent - carry) <= REL * max(1.0, inst.budget):
        errors.append(f"ledger: budget {inst.budget} != spend {total_spent} + leftover {carry}")
    gamma_bar = sum(len(r.assignment.satisfied) for r in trace.records) / len(trace.records)
    if not _close(trace.gamma_bar, gamma_bar):
        errors.append(f"average satisfied count {trace.gamma_bar} != {gamma_bar}")
    return errors
