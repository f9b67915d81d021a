"""Edge server capacity, deployment/upgrade prices and the per-stage budget ledger."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, TextIO

# absolute currency slack; depreciation makes exact integer arithmetic impossible
MONEY_EPS = 1e-9
DEPLOY = "deploy"
UPGRADE = "upgrade"


class InsufficientBudget(ValueError):
    pass


class DuplicateDeployment(ValueError):
    pass


@dataclass
class ServerState:
    node: int
    rpack_capacity: float  # bits per rpack
    max_rpacks: int
    rpacks: int = 0  # cumulative installed rpacks
    load: float = 0.0  # bits offloaded in the current stage
    installed: dict[int, int] = field(default_factory=dict)  # stage -> rpacks added

    def __post_init__(self):
        if not 0 <= self.rpacks <= self.max_rpacks:
            raise ValueError(f"server {self.node}: rpacks outside [0, {self.max_rpacks}]")

    @property
    def capacity(self) -> float:
        return self.rpacks * self.rpack_capacity

    @property
    def residual(self) -> float:
        return self.capacity - self.load

    def install(self, stage: int, rpacks: int) -> None:
        if rpacks < 1 or self.rpacks + rpacks > self.max_rpacks:
            raise ValueError(f"server {self.node}: cannot add {rpacks} rpacks to {self.rpacks}")
        self.rpacks += rpacks
        self.installed[stage] = self.installed.get(stage, 0) + rpacks

    def add_load(self, bits: float) -> None:
        if self.load + bits > self.capacity * (1 + 1e-9) + 1e-6:
            raise RuntimeError(f"server {self.node}: load {self.load + bits} exceeds capacity {self.capacity}")
        self.load += bits

    def copy(self) -> "ServerState":
        return ServerState(self.node, self.rpack_capacity, self.max_rpacks, self.rpacks,
                           self.load, dict(self.installed))


@dataclass(frozen=True)
class CostModel:
    infra_cost: float = 600.0  # I^1
    rpack_cost: float = 100.0  # kappa_u^1
    depreciation: float = 0.2  # phi

    def __post_init__(self):
        if not 0 <= self.depreciation < 1:
            raise ValueError("depreciation rate must lie in [0, 1)")
        if self.infra_cost < 0 or self.rpack_cost <= 0:
            raise ValueError("costs must be non-negative (rpack cost positive)")

    def factor(self, stage: int) -> float:
        return (1.0 - self.depreciation) ** (stage - 1)

    def infra(self, stage: int) -> float:
        return self.factor(stage) * self.infra_cost

    def rpack(self, stage: int) -> float:
        return self.factor(stage) * self.rpack_cost

    def deploy(self, rpacks: int, stage: int) -> float:
        return self.infra(stage) + rpacks * self.rpack(stage)

    def upgrade(self, rpacks: int, stage: int) -> float:
        return rpacks * self.rpack(stage)

    def scaled(self, factor: float) -> "CostModel":
        return CostModel(self.infra_cost * factor, self.rpack_cost * factor, self.depreciation)


@dataclass(frozen=True)
class Action:
    kind: str  # DEPLOY or UPGRADE
    node: int
    rpacks: int

    def __post_init__(self):
        if self.kind not in (DEPLOY, UPGRADE):
            raise ValueError(f"unknown action kind {self.kind!r}")


def cost_of(action: Action, stage: int, costs: CostModel, max_rpacks: int, installed: int = 0) -> float:
    """Price of ``action`` at ``stage``; ``installed`` is the server's rpack count before it."""
    m = action.rpacks
    if action.kind == DEPLOY:
        if not 1 <= m <= max_rpacks:
            raise ValueError(f"deploy needs 1..{max_rpacks} rpacks, got {m}")
        return costs.deploy(m, stage)
    if not 1 <= m <= max_rpacks - installed:
        raise ValueError(f"upgrade of a {installed}-rpack server needs 1..{max_rpacks - installed} rpacks, got {m}")
    return costs.upgrade(m, stage)


def budget_for_coverage(node_count: int, percent: float, costs: CostModel, max_rpacks: int) -> float:
    """B(x%): stage-1 price of full-capacity servers on ``percent`` of all nodes."""
    if not 0 <= percent <= 100:
        raise ValueError("coverage percent must lie in [0, 100]")
    return percent / 100.0 * node_count * costs.deploy(max_rpacks, 1)


@dataclass(frozen=True)
class SpendRecord:
    stage: int
    node: int
    kind: str
    rpacks: int
    cost: float
    remaining: float


class BudgetLedger:
    """Equal per-stage allocation ``total / stages`` with carry-over of unspent money."""

    def __init__(self, total: float, stages: int, costs: CostModel, max_rpacks: int,
                 deployed: Iterable[int] = ()):
        if total < 0:
            raise ValueError("budget must be >= 0")
        if stages < 1:
            raise ValueError("need at least one stage")
        self.total = float(total)
        self.stages = stages
        self.costs = costs
        self.max_rpacks = max_rpacks
        self.deployed = set(deployed)
        self.records: list[SpendRecord] = []
        self.available: dict[int, float] = {}
        self.carryover: dict[int, float] = {0: 0.0}
        self.stage = 0
        self.remaining = 0.0

    @property
    def allocation(self) -> float:
        return self.total / self.stages

    def open_stage(self, stage: int) -> float:
        if stage != self.stage + 1 or stage > self.stages:
            raise ValueError(f"cannot open stage {stage} after stage {self.stage}")
        self.stage = stage
        self.remaining = self.allocation + self.carryover[stage - 1]
        self.available[stage] = self.remaining
        return self.remaining

    def affordable(self, cost: float) -> bool:
        return cost <= self.remaining + MONEY_EPS

    def commit(self, action: Action, installed: int = 0) -> SpendRecord:
        if action.kind == DEPLOY and action.node in self.deployed:
            raise DuplicateDeployment(f"node {action.node} already hosts a server")
        if action.kind == UPGRADE and action.node not in self.deployed:
            raise ValueError(f"node {action.node} has no server to upgrade")
        cost = cost_of(action, self.stage, self.costs, self.max_rpacks, installed)
        if not self.affordable(cost):
            raise InsufficientBudget(
                f"stage {self.stage}: {action.kind} at node {action.node} costs {cost:.6g}, "
                f"only {self.remaining:.6g} left")
        self.remaining = max(self.remaining - cost, 0.0)
        if action.kind == DEPLOY:
            self.deployed.add(action.node)
        rec = SpendRecord(self.stage, action.node, action.kind, action.rpacks, cost, self.remaining)
        self.records.append(rec)
        return rec

    def close_stage(self) -> float:
        self.carryover[self.stage] = self.remaining
        return self.remaining

    def spent(self, stage: int) -> float:
        return sum(r.cost for r in self.records if r.stage == stage)

    def dump_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["stage", "node", "kind", "rpacks", "cost", "remaining"])
        for r in self.records:
            writer.writerow([r.stage, r.node, r.kind, r.rpacks, repr(r.cost), repr(r.remaining)])
