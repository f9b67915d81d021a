"""Multi-stage deploy/upgrade planning: the gain-to-cost heuristic and its baselines.

Each planning stage runs whole-task cloud offload, cloud-share reduction,
the deploy/upgrade-and-offload loop, fractional offload and a final cloud
drain. Budget left at the end of a stage carries over to the next one.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .infrastructure import (DEPLOY, MONEY_EPS, UPGRADE, Action, BudgetLedger, CostModel,
                             ServerState, SpendRecord)
from .offload import (DEADLINE_RTOL, StageAssignment, StageState, offload_cluster,
                      offload_fractions, offload_to_cloud, reduce_via_cloud)
from .topology import DelayModel, PathTable, Topology
from .workload import StageWorkload, Task, predicted

ALGORITHMS = ("H", "HO", "DF", "UF", "DO")
DO_RPACKS = 2
TRACE_SCHEMA = "mesu.trace/1"


@dataclass
class Instance:
    """A fully materialized planning problem.

    ``workloads`` holds the actual demand of every evaluated stage; the
    first ``stages`` of them are planning stages, later ones are evaluated
    with the final infrastructure and no spending.
    """

    topology: Topology
    workloads: list[StageWorkload]
    budget: float
    stages: int
    costs: CostModel = field(default_factory=CostModel)
    capacity: float = 10e9  # C_p, bits per rpack
    max_rpacks: int = 4
    initial: dict[int, int] = field(default_factory=dict)
    result_ratio: float = 0.1
    edge_rate: float = 10e9
    cloud_rate: float = 10e9
    horizon: int = 0
    seed: int = 0
    paths: PathTable | None = None

    def __post_init__(self):
        if self.stages < 1:
            raise ValueError("need at least one planning stage")
        if len(self.workloads) < self.stages:
            raise ValueError("fewer workloads than planning stages")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.capacity <= 0 or self.max_rpacks < 1:
            raise ValueError("rpack capacity and M_max must be positive")
        aps = set(self.topology.aps)
        for node, m in self.initial.items():
            if node not in aps:
                raise ValueError(f"initial server on non-AP node {node}")
            if not 0 <= m <= self.max_rpacks:
                raise ValueError(f"initial server {node} has {m} rpacks, outside [0, {self.max_rpacks}]")
        if self.paths is None:
            self.paths = PathTable(self.topology)
        self.model = DelayModel(self.paths, self.result_ratio, self.edge_rate, self.cloud_rate)

    @property
    def eval_stages(self) -> int:
        return len(self.workloads)

    def initial_servers(self) -> dict[int, ServerState]:
        out = {}
        for node, m in sorted(self.initial.items()):
            if m > 0:
                out[node] = ServerState(node, self.capacity, self.max_rpacks, rpacks=m)
        return out


@dataclass(frozen=True)
class ClusterCandidate:
    node: int
    kind: str
    rpacks: int
    tasks: tuple[int, ...]
    gain: int
    cost: float
    ratio: float


@dataclass(frozen=True)
class ActionRecord:
    stage: int
    kind: str
    node: int
    rpacks: int
    cost: float
    gain: int
    tasks: tuple[int, ...]


@dataclass
class StageRecord:
    stage: int
    planned: bool
    predicted: bool
    demand_stage: int  # furthest demand stage the actions were planned for
    tasks: tuple[Task, ...]  # actual demand the stage is evaluated on
    assignment: StageAssignment
    rpacks: dict[int, int]
    loads: dict[int, float]
    actions: list[ActionRecord] = field(default_factory=list)
    budget_available: float = 0.0
    spent: float = 0.0
    carryover: float = 0.0
    planning_gamma: int | None = None  # tasks the predicted-demand pass could serve

    @property
    def gamma(self) -> int:
        return self.assignment.gamma

    @property
    def gamma_pct(self) -> float:
        return 100.0 * self.gamma / len(self.tasks) if self.tasks else 100.0


@dataclass
class PlanTrace:
    algorithm: str
    stages: int
    budget: float
    capacity: float
    max_rpacks: int
    seed: int
    initial: dict[int, int]
    records: list[StageRecord]
    spend: list[SpendRecord]
    runtime_ms: float = 0.0

    @property
    def gamma_bar(self) -> float:
        """Mean satisfied-task count over the evaluated stages."""
        return sum(r.gamma for r in self.records) / len(self.records)

    @property
    def gamma_bar_pct(self) -> float:
        return sum(r.gamma_pct for r in self.records) / len(self.records)

    def to_dict(self) -> dict:
        stages = []
        for r in self.records:
            stages.append({
                "stage": r.stage,
                "planned": r.planned,
                "predicted": r.predicted,
                "demand_stage": r.demand_stage,
                "tasks": [[t.id, t.origin, t.deadline, t.size, t.sigma, int(t.grows), int(t.tightens)]
                          for t in r.tasks],
                "actions": [{"kind": a.kind, "node": a.node, "rpacks": a.rpacks, "cost": a.cost,
                             "gain": a.gain, "tasks": list(a.tasks)} for a in r.actions],
                "budget_available": r.budget_available,
                "spent": r.spent,
                "carryover": r.carryover,
                "rpacks": {str(k): v for k, v in sorted(r.rpacks.items())},
                "loads": {str(k): v for k, v in sorted(r.loads.items())},
                "fractions": [[f.task, f.server, f.size, f.delay] for f in r.assignment.fractions],
                "satisfied": sorted(r.assignment.satisfied),
                "gamma": r.gamma,
                "planning_gamma": r.planning_gamma,
            })
        return {
            "schema": TRACE_SCHEMA,
            "algorithm": self.algorithm,
            "planning_stages": self.stages,
            "budget": self.budget,
            "capacity": self.capacity,
            "max_rpacks": self.max_rpacks,
            "seed": self.seed,
            "initial": {str(k): v for k, v in sorted(self.initial.items())},
            "gamma_bar": self.gamma_bar,
            "gamma_bar_pct": self.gamma_bar_pct,
            "stages": stages,
        }

    def to_json(self) -> str:
        return dumps_trace(self.to_dict())


def _round_floats(obj, digits: int = 9):
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v, digits) for v in obj]
    return obj


def dumps_trace(data: dict) -> str:
    return json.dumps(_round_floats(data), sort_keys=True, indent=1) + "\n"


# -- cluster generation --------------------------------------------------------

def _sig(x: float, digits: int = 12) -> float:
    # ratio rounding so that uniform cost scaling cannot reorder exact ties
    return float(f"{x:.{digits}g}")


class ClusterBuilder:
    """Vectorized cluster evaluation for one stage after the cloud-share reduction.

    Delay feasibility of every pending task's residual on every AP is fixed
    for the stage, so it is computed once; each loop iteration only redoes
    the smallest-first capacity fill over the still-pending tasks.
    """

    def __init__(self, state: StageState, nodes: list[int]):
        self.state = state
        self.nodes = list(nodes)
        model = state.model
        ids = sorted(state.pending, key=lambda k: (state.residual[k], k))
        self.ids = np.array(ids, dtype=np.int64)
        self.sizes = np.array([state.residual[k] for k in ids], dtype=float)
        if not ids or not self.nodes:
            self.feasible = np.zeros((len(ids), len(self.nodes)), dtype=bool)
            return
        origins = sorted({state.tasks[k].origin for k in ids})
        row = {o: i for i, o in enumerate(origins)}
        slope = np.empty((len(origins), len(self.nodes)))
        offset = np.empty_like(slope)
        for o in origins:
            for j, s in enumerate(self.nodes):
                slope[row[o], j], offset[row[o], j] = model.coefficients(o, s)
        which = np.array([row[state.tasks[k].origin] for k in ids])
        limits = np.array([state.tasks[k].limit for k in ids])
        delay = slope[which] * self.sizes[:, None] + offset[which]
        # half the scalar slack so offload_cluster's recomputation always agrees
        tol = 0.5 * DEADLINE_RTOL * np.maximum(1.0, limits)
        self.feasible = delay <= (limits + tol)[:, None]

    def candidates(self, available: list[int], servers: dict[int, ServerState], remaining: float,
                   costs: CostModel, stage: int, max_rpacks: int, capacity: float,
                   deploy_rpacks: tuple[int, ...] | None = None,
                   allow_upgrade: bool = True) -> list[ClusterCandidate]:
        if not available:
            return []
        pending = set(self.state.pending)
        alive = np.fromiter((k in pending for k in self.ids), dtype=bool, count=len(self.ids))
        col = {s: j for j, s in enumerate(self.nodes)}
        cols = np.array([col[s] for s in available], dtype=np.int64)
        feas = self.feasible[alive][:, cols]
        sizes = self.sizes[alive]
        ids = self.ids[alive]
        n_nodes = len(available)
        caps = np.full((n_nodes, max_rpacks), -np.inf)
        price = np.full((n_nodes, max_rpacks), np.inf)
        kinds = []
        for j, s in enumerate(available):
            srv = servers.get(s)
            if srv is None or srv.rpacks == 0:
                kinds.append(DEPLOY)
                choices = deploy_rpacks if deploy_rpacks is not None else range(1, max_rpacks + 1)
                for m in choices:
                    if 1 <= m <= max_rpacks:
                        cost = costs.deploy(m, stage)
                        if cost <= remaining + MONEY_EPS:
                            caps[j, m - 1] = m * capacity
                            price[j, m - 1] = cost
            else:
                kinds.append(UPGRADE)
                if not allow_upgrade:
                    continue
                for m in range(1, max_rpacks - srv.rpacks + 1):
                    cost = costs.upgrade(m, stage)
                    if cost <= remaining + MONEY_EPS:
                        caps[j, m - 1] = srv.residual + m * capacity
                        price[j, m - 1] = cost
        if feas.size:
            fill = np.cumsum(np.where(feas, sizes[:, None], 0.0), axis=0)
            fits = feas[:, :, None] & (fill[:, :, None] <= caps[None, :, :] * (1 + 1e-12))
            counts = fits.sum(axis=0)
        else:
            fits = np.zeros((0, n_nodes, max_rpacks), dtype=bool)
            counts = np.zeros((n_nodes, max_rpacks), dtype=np.int64)
        counts = np.where(np.isfinite(price), counts, -1)
        best = np.argmax(counts, axis=1)  # first maximum, i.e. the smallest m
        out = []
        for j, s in enumerate(available):
            m_idx = int(best[j])
            gain = int(counts[j, m_idx])
            if gain <= 0:
                continue
            cost = float(price[j, m_idx])
            tasks = tuple(int(k) for k in ids[fits[:, j, m_idx]])
            out.append(ClusterCandidate(s, kinds[j], m_idx + 1, tasks, gain, cost, gain / cost))
        out.sort(key=lambda c: (-_sig(c.ratio), -c.gain, c.node))
        return out


def generate_clusters(state: StageState, nodes: list[int], servers: dict[int, ServerState],
                      remaining: float, costs: CostModel, stage: int, max_rpacks: int,
                      capacity: float, **kw) -> list[ClusterCandidate]:
    """Best cluster per candidate node, ranked by gain-to-cost ratio."""
    return ClusterBuilder(state, nodes).candidates(nodes, servers, remaining, costs, stage,
                                                   max_rpacks, capacity, **kw)


# -- deploy / upgrade / offload loop ------------------------------------------

def _select(cands: list[ClusterCandidate], algorithm: str) -> list[ClusterCandidate]:
    if algorithm == "DF":
        first = [c for c in cands if c.kind == DEPLOY]
        return first or cands
    if algorithm == "UF":
        first = [c for c in cands if c.kind == UPGRADE]
        return first or cands
    return cands


def _guard(algorithm: str, costs: CostModel, stage: int) -> float:
    if algorithm == "DO":
        return costs.deploy(DO_RPACKS, stage)
    return min(costs.deploy(1, stage), costs.upgrade(1, stage))


def deploy_upgrade_offload(state: StageState, ledger: BudgetLedger, nodes: list[int],
                           algorithm: str, capacity: float, max_rpacks: int) -> list[ActionRecord]:
    """Repeatedly buy the best-ratio cluster and offload it until money, tasks or nodes run out."""
    stage = state.stage
    costs = ledger.costs
    servers = state.servers
    guard = _guard(algorithm, costs, stage)
    kw = {}
    if algorithm == "DO":
        kw = {"deploy_rpacks": (DO_RPACKS,), "allow_upgrade": False}
    available = list(nodes)
    builder = ClusterBuilder(state, available)
    actions = []
    while state.pending and available and ledger.remaining + MONEY_EPS >= guard:
        cands = builder.candidates(available, servers, ledger.remaining, costs, stage,
                                   max_rpacks, capacity, **kw)
        cands = _select(cands, algorithm)
        if not cands:
            break
        top = cands[0]
        srv = servers.get(top.node)
        installed = srv.rpacks if srv is not None else 0
        rec = ledger.commit(Action(top.kind, top.node, top.rpacks), installed=installed)
        if srv is None:
            srv = servers[top.node] = ServerState(top.node, capacity, max_rpacks)
        srv.install(stage, top.rpacks)
        offload_cluster(state, top.tasks, top.node)
        available.remove(top.node)
        actions.append(ActionRecord(stage, top.kind, top.node, top.rpacks, rec.cost, top.gain, top.tasks))
    return actions


# -- stage pipelines -------------------------------------------------------------

def _reset_loads(servers: dict[int, ServerState]) -> None:
    for srv in servers.values():
        srv.load = 0.0


def evaluate_stage(stage: int, tasks, servers: dict[int, ServerState], model: DelayModel) -> StageState:
    """Offload-only pipeline on a fixed infrastructure."""
    _reset_loads(servers)
    state = StageState(stage, tasks, servers, model)
    offload_to_cloud(state, mark_satisfied=True)
    reduce_via_cloud(state)
    offload_fractions(state)
    offload_to_cloud(state, mark_satisfied=False)
    return state


def plan_stage(stage: int, tasks, servers: dict[int, ServerState], model: DelayModel,
               ledger: BudgetLedger, nodes: list[int], algorithm: str, capacity: float,
               max_rpacks: int, ahead=None) -> tuple[StageState, list[ActionRecord], int | None]:
    """One planning stage; ``ahead`` optionally holds predicted future tasks.

    With ``ahead`` the money left after serving the current demand is spent
    on the predicted demand before the fractional pass, so the extra
    capacity also serves the current stage.
    """
    _reset_loads(servers)
    state = StageState(stage, tasks, servers, model)
    offload_to_cloud(state, mark_satisfied=True)
    reduce_via_cloud(state)
    actions = deploy_upgrade_offload(state, ledger, nodes, algorithm, capacity, max_rpacks)
    ahead_gamma = None
    if ahead is not None:
        extra, ahead_gamma = provision(stage, ahead, servers, model, ledger, nodes, algorithm,
                                       capacity, max_rpacks)
        actions.extend(extra)
    offload_fractions(state)
    offload_to_cloud(state, mark_satisfied=False)
    return state, actions, ahead_gamma


def provision(stage: int, tasks, servers: dict[int, ServerState], model: DelayModel,
              ledger: BudgetLedger, nodes: list[int], algorithm: str, capacity: float,
              max_rpacks: int) -> tuple[list[ActionRecord], int]:
    """Buy capacity for ``tasks`` as if they arrived on empty servers; installs land on ``servers``."""
    future = {s: srv.copy() for s, srv in servers.items()}
    _reset_loads(future)
    state = StageState(stage, tasks, future, model)
    offload_to_cloud(state, mark_satisfied=True)
    reduce_via_cloud(state)
    actions = deploy_upgrade_offload(state, ledger, nodes, algorithm, capacity, max_rpacks)
    for a in actions:
        srv = servers.get(a.node)
        if srv is None:
            srv = servers[a.node] = ServerState(a.node, capacity, max_rpacks)
        srv.install(stage, a.rpacks)
    return actions, state.gamma


def plan(inst: Instance, algorithm: str = "H") -> PlanTrace:
    """Run one algorithm over all stages of ``inst``."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    if algorithm == "DO" and inst.max_rpacks < DO_RPACKS:
        raise ValueError(f"deploy-only baseline needs M_max >= {DO_RPACKS}")
    start = time.perf_counter()
    servers = inst.initial_servers()
    ledger = BudgetLedger(inst.budget, inst.stages, inst.costs, inst.max_rpacks, deployed=servers)
    nodes = list(inst.topology.aps)
    model = inst.model
    records = []
    for t in range(1, inst.eval_stages + 1):
        actual = inst.workloads[t - 1]
        if t <= inst.stages:
            available = ledger.open_stage(t)
            ahead = None
            if algorithm == "H" and t == inst.stages and inst.horizon > 0:
                ahead = predicted(actual, inst.horizon)
            state, actions, ahead_gamma = plan_stage(
                t, actual.tasks, servers, model, ledger, nodes, algorithm, inst.capacity,
                inst.max_rpacks, ahead=ahead.tasks if ahead is not None else None)
            carry = ledger.close_stage()
            rec = StageRecord(t, True, ahead is not None,
                              ahead.demand_stage if ahead is not None else actual.demand_stage,
                              actual.tasks, state.assignment(), {}, {}, actions, available,
                              ledger.spent(t), carry, ahead_gamma)
        else:
            state = evaluate_stage(t, actual.tasks, servers, model)
            carry = ledger.carryover[inst.stages]
            rec = StageRecord(t, False, False, actual.demand_stage, actual.tasks,
                              state.assignment(), {}, {}, carryover=carry)
        rec.rpacks = {s: srv.rpacks for s, srv in sorted(servers.items())}
        rec.loads = {s: srv.load for s, srv in sorted(servers.items())}
        records.append(rec)
    elapsed = (time.perf_counter() - start) * 1000.0
    return PlanTrace(algorithm, inst.stages, inst.budget, inst.capacity, inst.max_rpacks, inst.seed,
                     dict(sorted(inst.initial.items())), records, list(ledger.records), elapsed)


# -- metrics ---------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    gamma_bar: float
    gamma_bar_pct: float
    S_hat: float
    M_hat: float
    C_util: float
    dB_hat: float


def metrics(trace: PlanTrace, topology: Topology) -> Metrics:
    """Deployment, rpack, utilization and leftover-budget ratios at the last evaluated stage."""
    last = trace.records[-1]
    n_nodes = len(topology.nodes)
    n_aps = len(topology.aps)
    deployed = sum(1 for m in last.rpacks.values() if m > 0)
    rpacks = sum(last.rpacks.values())
    full = n_aps * trace.max_rpacks
    load = sum(last.loads.values())
    leftover = trace.records[trace.stages - 1].carryover
    return Metrics(
        gamma_bar=trace.gamma_bar,
        gamma_bar_pct=trace.gamma_bar_pct,
        S_hat=100.0 * deployed / n_nodes,
        M_hat=100.0 * rpacks / full if full else 0.0,
        C_util=100.0 * load / (full * trace.capacity) if full else 0.0,
        dB_hat=100.0 * leftover / trace.budget if trace.budget > 0 else 0.0,
    )
