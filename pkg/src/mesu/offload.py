"""Task-to-server assignment within one stage.

The stage pipeline is: whole-task cloud offload, cloud-share reduction of
the rest, cluster offload onto newly bought capacity, fractional offload
onto leftover capacity, and finally draining unsatisfied tasks to the cloud.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .infrastructure import ServerState
from .topology import DelayModel
from .workload import Task

DEADLINE_RTOL = 1e-9


def within(delay: float, limit: float) -> bool:
    return delay <= limit + DEADLINE_RTOL * max(1.0, abs(limit))


@dataclass(frozen=True)
class Fraction:
    task: int
    server: int
    size: float  # bits
    delay: float  # seconds


@dataclass
class StageAssignment:
    stage: int
    fractions: list[Fraction] = field(default_factory=list)
    satisfied: set[int] = field(default_factory=set)

    @property
    def gamma(self) -> int:
        return len(self.satisfied)

    def dump_csv(self, fh: TextIO, write_header: bool = True) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        if write_header:
            writer.writerow(["stage", "task", "server", "fraction_bits", "delay_s", "satisfied"])
        for f in sorted(self.fractions, key=lambda f: (f.task, f.server)):
            writer.writerow([self.stage, f.task, f.server, repr(f.size), repr(f.delay),
                             int(f.task in self.satisfied)])


class StageState:
    """Mutable offloading state of one stage.

    ``residual[k]`` is the part of task ``k`` still to be placed on edge
    servers; ``pending`` lists unsatisfied task ids.
    """

    def __init__(self, stage: int, tasks: Iterable[Task], servers: dict[int, ServerState],
                 model: DelayModel):
        self.stage = stage
        self.tasks = {t.id: t for t in tasks}
        self.servers = servers
        self.model = model
        self.cloud = model.cloud
        self.residual = {k: t.size for k, t in self.tasks.items()}
        self.fractions: dict[int, list[Fraction]] = {k: [] for k in self.tasks}
        self.satisfied: set[int] = set()
        self.pending: list[int] = sorted(self.tasks)

    @property
    def gamma(self) -> int:
        return len(self.satisfied)

    def _fraction(self, k: int, server: int, bits: float) -> Fraction:
        t = self.tasks[k]
        return Fraction(k, server, bits, self.model.delay(t.origin, server, bits))

    def _mark(self, k: int) -> None:
        self.satisfied.add(k)
        self.residual[k] = 0.0

    def _drop_pending(self, done: set[int]) -> None:
        if done:
            self.pending = [k for k in self.pending if k not in done]

    def assignment(self) -> StageAssignment:
        out = StageAssignment(self.stage, satisfied=set(self.satisfied))
        for k in sorted(self.fractions):
            out.fractions.extend(self.fractions[k])
        return out


def max_cloud_fraction(task: Task, model: DelayModel) -> float:
    """Largest share of ``task`` the cloud can finish within ``sigma * deadline``.

    Inverts the affine completion delay at the cloud; both propagation legs
    are charged. Clamped to ``[0, task.size]``.
    """
    return min(task.size, model.max_bits(task.origin, model.cloud, task.limit))


def offload_to_cloud(state: StageState, mark_satisfied: bool = True) -> int:
    """Move pending tasks wholly to the cloud.

    With ``mark_satisfied`` only tasks the cloud finishes in time move and
    each counts as satisfied. Without it every pending task is drained to
    the cloud unsatisfied. Returns the number of newly satisfied tasks.
    """
    moved = set()
    gained = 0
    for k in state.pending:
        t = state.tasks[k]
        frac = state._fraction(k, state.cloud, t.size)
        if mark_satisfied:
            if not within(frac.delay, t.limit):
                continue
            state._mark(k)
            gained += 1
        else:
            state.residual[k] = 0.0
        state.fractions[k] = [frac]
        moved.add(k)
    state._drop_pending(moved)
    return gained


def reduce_via_cloud(state: StageState) -> None:
    """Send each pending task's maximal in-deadline share to the cloud."""
    for k in state.pending:
        t = state.tasks[k]
        share = max_cloud_fraction(t, state.model)
        if share <= 0:
            continue
        share = min(share, t.size)
        state.fractions[k] = [state._fraction(k, state.cloud, share)]
        state.residual[k] = t.size - share


def offload_cluster(state: StageState, cluster: Iterable[int], node: int) -> int:
    """Place each clustered task's whole residual on ``node`` and mark it satisfied."""
    server = state.servers[node]
    done = set()
    for k in cluster:
        bits = state.residual[k]
        frac = state._fraction(k, node, bits)
        if not within(frac.delay, state.tasks[k].limit):
            raise RuntimeError(f"cluster task {k} misses its deadline on node {node}")
        server.add_load(bits)
        state.fractions[k].append(frac)
        state._mark(k)
        done.add(k)
    state._drop_pending(done)
    return len(done)


def server_order(state: StageState, origin: int, nodes: Iterable[int]) -> list[int]:
    return sorted(nodes, key=lambda s: (state.model.coefficients(origin, s)[0], s))


def offload_fractions(state: StageState) -> int:
    """Split pending tasks over servers with spare capacity; all-or-nothing per task.

    Tasks go smallest residual first. Servers are tried nearest (smallest
    delay slope) first; each takes ``min(residual, spare)`` if that fraction
    meets the task's limit. A task is committed only when fully placed.
    """
    cap_eps = 1e-9
    gained = 0
    done = set()
    order = sorted(state.pending, key=lambda k: (state.residual[k], k))
    for k in order:
        t = state.tasks[k]
        live = [s for s, srv in state.servers.items() if srv.residual > cap_eps * srv.rpack_capacity]
        if not live:
            break
        left = state.residual[k]
        trial = []
        for s in server_order(state, t.origin, live):
            if left <= 0:
                break
            bits = min(left, state.servers[s].residual)
            frac = state._fraction(k, s, bits)
            if within(frac.delay, t.limit):
                trial.append(frac)
                left -= bits
        if left > 0 or not trial:
            continue
        for frac in trial:
            state.servers[frac.server].add_load(frac.size)
        state.fractions[k].extend(trial)
        state._mark(k)
        done.add(k)
        gained += 1
    state._drop_pending(done)
    return gained
