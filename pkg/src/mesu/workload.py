"""Per-stage task populations: initial draw, growth, size/deadline aging, prediction.

A population is an append-only sequence of tasks. Task ``k`` draws its
origin, base size, base deadline and tolerance from a generator seeded by
``(seed, k)``, so the stage-``t`` workload is always a prefix of the
stage-``t+1`` workload and a predicted workload is just a later prefix.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, TextIO

import numpy as np

GB = 1e9

# salt keeping flag draws apart from per-task attribute draws
_FLAG_STREAM = 0x5EED


@dataclass(frozen=True)
class Task:
    id: int
    origin: int
    deadline: float  # seconds
    size: float  # bits
    sigma: float = 1.0
    grows: bool = False
    tightens: bool = False
    base_size: float | None = None
    base_deadline: float | None = None

    def __post_init__(self):
        if not self.size > 0:
            raise ValueError(f"task {self.id}: size must be positive")
        if not self.deadline > 0:
            raise ValueError(f"task {self.id}: deadline must be positive")
        if self.sigma < 1.0:
            raise ValueError(f"task {self.id}: tolerance must be >= 1")
        if self.base_size is None:
            object.__setattr__(self, "base_size", self.size)
        if self.base_deadline is None:
            object.__setattr__(self, "base_deadline", self.deadline)

    @property
    def limit(self) -> float:
        """Tolerated completion time, ``sigma * deadline``."""
        return self.sigma * self.deadline

    def aged(self, demand_stage: int, size_growth: float, tightening: float) -> "Task":
        exponent = demand_stage - 1
        size = self.base_size * (1.0 + size_growth) ** exponent if self.grows else self.base_size
        deadline = (self.base_deadline * (1.0 - tightening) ** exponent
                    if self.tightens else self.base_deadline)
        return replace(self, size=size, deadline=deadline)


@dataclass(frozen=True)
class GrowthParams:
    task_growth: float = 0.5  # mu
    size_share: float = 0.2  # rho_b
    deadline_share: float = 0.2  # rho_tau
    size_growth: float = 0.5  # alpha_b
    deadline_tightening: float = 0.5  # alpha_tau
    horizon: int = 0  # h

    def __post_init__(self):
        if self.task_growth < 0:
            raise ValueError("task growth rate must be >= 0")
        for name in ("size_share", "deadline_share", "deadline_tightening"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.deadline_tightening >= 1:
            raise ValueError("deadline tightening must be < 1 to keep deadlines positive")
        if self.size_growth < 0:
            raise ValueError("size growth rate must be >= 0")
        if self.horizon < 0:
            raise ValueError("prediction horizon must be >= 0")


@dataclass(frozen=True)
class TaskSpec:
    sizes: tuple[float, ...] = (10 * GB, 20 * GB, 30 * GB)
    deadlines: tuple[float, ...] = (3.0, 5.0, 10.0)
    intolerant_prob: float = 0.5
    sigma_range: tuple[float, float] = (1.5, 3.0)

    def __post_init__(self):
        if not self.sizes or not self.deadlines:
            raise ValueError("size and deadline choice sets must be nonempty")
        if not 0 <= self.intolerant_prob <= 1:
            raise ValueError("intolerant probability must lie in [0, 1]")
        lo, hi = self.sigma_range
        if not 1.0 <= lo <= hi:
            raise ValueError("sigma range must satisfy 1 <= lo <= hi")


@dataclass(frozen=True)
class StageWorkload:
    stage: int
    tasks: tuple[Task, ...]
    initial_count: int
    seed: int
    aps: tuple[int, ...]
    spec: TaskSpec = field(default_factory=TaskSpec)
    growth: GrowthParams = field(default_factory=GrowthParams)
    demand_stage: int | None = None  # differs from ``stage`` for predicted demand

    def __post_init__(self):
        if self.demand_stage is None:
            object.__setattr__(self, "demand_stage", self.stage)

    @property
    def predicted(self) -> bool:
        return self.demand_stage != self.stage

    def __len__(self):
        return len(self.tasks)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-9))


def stage_count(initial_count: int, task_growth: float, stage: int) -> int:
    return round_half_up((1.0 + task_growth) ** (stage - 1) * initial_count)


def _draw_task(k: int, seed: int, aps, spec: TaskSpec) -> Task:
    rng = np.random.default_rng([seed, k])
    origin = aps[int(rng.integers(len(aps)))]
    size = spec.sizes[int(rng.integers(len(spec.sizes)))]
    deadline = spec.deadlines[int(rng.integers(len(spec.deadlines)))]
    if rng.random() < spec.intolerant_prob:
        sigma = 1.0
    else:
        sigma = float(rng.uniform(*spec.sigma_range))
    return Task(id=k, origin=origin, deadline=float(deadline), size=float(size), sigma=sigma)


def _flag_block(tasks: list[Task], start: int, growth: GrowthParams, seed: int, stage: int) -> list[Task]:
    """Flag tasks ``start..`` so that floor(share * n) tasks carry each flag overall."""
    n = len(tasks)
    new_ids = list(range(start, n))
    rng = np.random.default_rng([seed, _FLAG_STREAM, stage])
    for attr, share in (("grows", growth.size_share), ("tightens", growth.deadline_share)):
        have = sum(getattr(t, attr) for t in tasks[:start])
        need = min(max(math.floor(share * n + 1e-9) - have, 0), len(new_ids))
        if need:
            picked = rng.choice(len(new_ids), size=need, replace=False)
            for idx in sorted(int(i) for i in picked):
                k = new_ids[idx]
                tasks[k] = replace(tasks[k], **{attr: True})
    return tasks


def generate_initial(aps: Iterable[int], count: int, spec: TaskSpec = TaskSpec(),
                     growth: GrowthParams = GrowthParams(), seed: int = 0) -> StageWorkload:
    """Stage-1 workload of ``count`` tasks spread uniformly over the access points."""
    aps = tuple(sorted(aps))
    if not aps:
        raise ValueError("no access points to host tasks")
    if count < 0:
        raise ValueError("task count must be >= 0")
    tasks = [_draw_task(k, seed, aps, spec) for k in range(count)]
    tasks = _flag_block(tasks, 0, growth, seed, 1)
    return StageWorkload(stage=1, tasks=tuple(tasks), initial_count=count, seed=seed,
                         aps=aps, spec=spec, growth=growth)


def _advance(w: StageWorkload) -> StageWorkload:
    g = w.growth
    demand = w.demand_stage + 1
    n = stage_count(w.initial_count, g.task_growth, demand)
    tasks = list(w.tasks)
    start = len(tasks)
    tasks.extend(_draw_task(k, w.seed, w.aps, w.spec) for k in range(start, n))
    tasks = _flag_block(tasks, start, g, w.seed, demand)
    tasks = [t.aged(demand, g.size_growth, g.deadline_tightening) for t in tasks]
    return replace(w, stage=w.stage + 1, demand_stage=demand, tasks=tuple(tasks))


def evolve(workload: StageWorkload, predict: bool = False) -> StageWorkload:
    """Workload of the next stage.

    With ``predict`` the next stage carries the demand expected ``horizon``
    stages later: counts, sizes and deadlines use exponent ``t - 1 + h``.
    """
    w = workload
    steps = 1 + (w.growth.horizon if predict else 0)
    for _ in range(steps):
        w = _advance(w)
    return replace(w, stage=workload.stage + 1)


def predicted(workload: StageWorkload, horizon: int) -> StageWorkload:
    """The same planning stage, relabelled with the demand ``horizon`` stages ahead."""
    w = workload
    for _ in range(horizon):
        w = _advance(w)
    return replace(w, stage=workload.stage)


def stage_sequence(first: StageWorkload, stages: int) -> list[StageWorkload]:
    out = [first]
    while len(out) < stages:
        out.append(evolve(out[-1]))
    return out


CSV_COLUMNS = ("stage", "task_id", "origin", "deadline_s", "size_bits", "sigma", "flag_b", "flag_tau")


def dump_workloads(workloads: Iterable[StageWorkload], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for w in workloads:
        for t in w.tasks:
            writer.writerow([w.stage, t.id, t.origin, repr(t.deadline), repr(t.size), repr(t.sigma),
                             int(t.grows), int(t.tightens)])


def load_workloads(fh: TextIO) -> dict[int, list[Task]]:
    out: dict[int, list[Task]] = {}
    for row in csv.DictReader(fh):
        task = Task(id=int(row["task_id"]), origin=int(row["origin"]),
                    deadline=float(row["deadline_s"]), size=float(row["size_bits"]),
                    sigma=float(row["sigma"]), grows=row["flag_b"] == "1",
                    tightens=row["flag_tau"] == "1")
        out.setdefault(int(row["stage"]), []).append(task)
    return out
