"""Scenario configs, topology generation and parameter sweeps."""
from __future__ import annotations

import csv
import json
import math
import re
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import TextIO

import numpy as np

from .infrastructure import CostModel, budget_for_coverage
from .planner import ALGORITHMS, Instance, metrics, plan
from .topology import Link, Topology
from .workload import GB, GrowthParams, TaskSpec, generate_initial, round_half_up, stage_sequence

SCENARIO_SCHEMA = "mesu.scenario/1"
SWEEP_SCHEMA = "mesu.sweep/1"
AXES = ("budget", "tasks", "cost_ratio", "stages")

_SPEC_RE = re.compile(r"^(\d+)N(\d+)E$", re.IGNORECASE)


def parse_spec(spec: str) -> tuple[int, int]:
    match = _SPEC_RE.match(spec.strip())
    if not match:
        raise ValueError(f"topology spec {spec!r} is not of the form xNyE")
    return int(match.group(1)), int(match.group(2))


def generate_topology(spec: str, seed: int = 0, ap_rates=(20e9, 40e9), cloud_rates=(2e9, 5e9),
                      prop_ap_ap: float | None = 0.0, prop_ap_cloud: float | None = 0.05) -> Topology:
    """Random connected network with ``x`` nodes (the last one is the cloud) and ``y`` AP-AP links.

    A random spanning tree over the APs is completed with uniformly drawn
    extra links; every AP also gets its own cloud uplink.
    """
    x, y = parse_spec(spec)
    n_aps = x - 1
    if n_aps < 1:
        raise ValueError(f"{spec}: need at least one access point besides the cloud")
    max_links = n_aps * (n_aps - 1) // 2
    if y < x - 1 or y > max_links:
        raise ValueError(f"{spec}: link count must lie in [{x - 1}, {max_links}] for {n_aps} access points")
    rng = np.random.default_rng(seed)
    order = [int(v) for v in rng.permutation(n_aps)]
    edges = set()
    for i in range(1, n_aps):
        j = order[int(rng.integers(i))]
        a, b = order[i], j
        edges.add((min(a, b), max(a, b)))
    remaining = [(a, b) for a in range(n_aps) for b in range(a + 1, n_aps) if (a, b) not in edges]
    extra = y - len(edges)
    if extra > 0:
        picked = rng.choice(len(remaining), size=extra, replace=False)
        edges.update(remaining[int(i)] for i in picked)
    cloud = n_aps
    links = []
    for a, b in sorted(edges):
        links.append(Link(a, b, 0.0, float(ap_rates[int(rng.integers(len(ap_rates)))])))
    for a in range(n_aps):
        links.append(Link(a, cloud, 0.0, float(cloud_rates[int(rng.integers(len(cloud_rates)))])))
    return Topology(nodes=tuple(range(x)), cloud=cloud, links=tuple(links),
                    prop_ap_ap=prop_ap_ap, prop_ap_cloud=prop_ap_cloud)


@dataclass
class Scenario:
    """Declarative planning problem; ``materialize`` turns it into an :class:`Instance`."""

    topology: str = "25N40E"  # xNyE generator spec, or a path when ``topology_file`` is set
    topology_file: bool = False
    topology_seed: int | None = None  # defaults to ``seed``
    stages: int = 3
    eval_stages: int | None = None  # defaults to ``stages``
    horizon: int | None = None  # defaults to max(0, 5 - stages)
    budget: float | None = None
    coverage_pct: float | None = 75.0
    infra_cost: float = 600.0
    rpack_cost: float = 100.0
    depreciation: float = 0.2
    task_growth: float = 0.5
    size_share: float = 0.2
    deadline_share: float = 0.2
    size_growth: float = 0.5
    deadline_tightening: float = 0.5
    initial_tasks: int | None = None
    tasks_per_node: float = 3.0
    sizes_gb: tuple[float, ...] = (10.0, 20.0, 30.0)
    deadlines_s: tuple[float, ...] = (3.0, 5.0, 10.0)
    intolerant_prob: float = 0.5
    sigma_range: tuple[float, float] = (1.5, 3.0)
    capacity_gb: float = 10.0
    max_rpacks: int = 4
    initial_fraction: float = 0.5
    initial_rpacks: int | None = None  # defaults to max_rpacks // 2
    initial_servers: dict[int, int] | None = None  # explicit node -> rpacks map
    result_ratio: float = 0.1
    edge_rate_gbps: float = 10.0
    cloud_rate_gbps: float = 10.0
    seed: int = 0
    algorithms: tuple[str, ...] = ALGORITHMS

    def __post_init__(self):
        if self.stages < 1:
            raise ValueError("stages must be >= 1")
        if self.eval_stages is not None and self.eval_stages < self.stages:
            raise ValueError("eval_stages must be >= stages")
        if self.budget is None and self.coverage_pct is None:
            raise ValueError("give either a total budget or a coverage percent")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.coverage_pct is not None and not 0 <= self.coverage_pct <= 100:
            raise ValueError("coverage_pct must lie in [0, 100]")
        if not 0 <= self.initial_fraction <= 1:
            raise ValueError("initial_fraction must lie in [0, 1]")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        self.sizes_gb = tuple(self.sizes_gb)
        self.deadlines_s = tuple(self.deadlines_s)
        self.sigma_range = tuple(self.sigma_range)
        self.algorithms = tuple(self.algorithms)
        if self.initial_servers is not None:
            self.initial_servers = {int(k): int(v) for k, v in self.initial_servers.items()}
        # surface parameter errors at load time rather than mid-sweep
        self.costs()
        self.growth()
        self.task_spec()

    # -- derived components ---------------------------------------------------

    def costs(self) -> CostModel:
        return CostModel(self.infra_cost, self.rpack_cost, self.depreciation)

    def growth(self) -> GrowthParams:
        return GrowthParams(self.task_growth, self.size_share, self.deadline_share, self.size_growth,
                            self.deadline_tightening, self.effective_horizon)

    def task_spec(self) -> TaskSpec:
        return TaskSpec(tuple(s * GB for s in self.sizes_gb), tuple(self.deadlines_s),
                        self.intolerant_prob, tuple(self.sigma_range))

    @property
    def effective_horizon(self) -> int:
        return self.horizon if self.horizon is not None else max(0, 5 - self.stages)

    def build_topology(self) -> Topology:
        if self.topology_file:
            return Topology.load(self.topology)
        seed = self.topology_seed if self.topology_seed is not None else self.seed
        return generate_topology(self.topology, seed)

    def total_budget(self, topology: Topology) -> float:
        if self.budget is not None:
            return float(self.budget)
        return budget_for_coverage(len(topology.nodes), self.coverage_pct, self.costs(), self.max_rpacks)

    def initial_deployment(self, topology: Topology) -> dict[int, int]:
        if self.initial_servers is not None:
            return dict(sorted(self.initial_servers.items()))
        aps = topology.aps
        n = round_half_up(self.initial_fraction * len(aps))
        rpacks = self.initial_rpacks if self.initial_rpacks is not None else self.max_rpacks // 2
        if n == 0 or rpacks == 0:
            return {}
        rng = np.random.default_rng([self.seed, 0xD1])
        chosen = sorted(int(aps[i]) for i in rng.choice(len(aps), size=n, replace=False))
        return {s: rpacks for s in chosen}

    def materialize(self, topology: Topology | None = None) -> Instance:
        topo = topology if topology is not None else self.build_topology()
        count = self.initial_tasks
        if count is None:
            count = round_half_up(self.tasks_per_node * len(topo.nodes))
        first = generate_initial(topo.aps, count, self.task_spec(), self.growth(), seed=self.seed)
        n_eval = self.eval_stages if self.eval_stages is not None else self.stages
        return Instance(
            topology=topo,
            workloads=stage_sequence(first, n_eval),
            budget=self.total_budget(topo),
            stages=self.stages,
            costs=self.costs(),
            capacity=self.capacity_gb * GB,
            max_rpacks=self.max_rpacks,
            initial=self.initial_deployment(topo),
            result_ratio=self.result_ratio,
            edge_rate=self.edge_rate_gbps * GB,
            cloud_rate=self.cloud_rate_gbps * GB,
            horizon=self.effective_horizon,
            seed=self.seed,
        )

    # -- JSON -------------------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"schema": SCENARIO_SCHEMA}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            if isinstance(value, dict):
                value = {str(k): v for k, v in value.items()}
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = dict(data)
        schema = data.pop("schema", None)
        if schema != SCENARIO_SCHEMA:
            raise ValueError(f"unsupported scenario schema {schema!r}, expected {SCENARIO_SCHEMA!r}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown scenario keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ValueError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")


# -- sweeps -------------------------------------------------------------------

@dataclass
class SweepSpec:
    axis: str
    values: tuple[float, ...]
    base: Scenario = field(default_factory=Scenario)
    repetitions: int = 10
    algorithms: tuple[str, ...] | None = None  # defaults to the base scenario's list
    eval_stages: int | None = None  # stage sweeps evaluate every T over this many stages
    timing: bool = True  # False writes runtime_ms = 0 for byte-stable CSVs

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; choose from {', '.join(AXES)}")
        if not self.values:
            raise ValueError("sweep needs at least one axis value")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        self.values = tuple(self.values)
        if self.algorithms is not None:
            self.algorithms = tuple(self.algorithms)
            for a in self.algorithms:
                if a not in ALGORITHMS:
                    raise ValueError(f"unknown algorithm {a!r}")

    @property
    def algos(self) -> tuple[str, ...]:
        return self.algorithms if self.algorithms is not None else self.base.algorithms

    def cell_scenario(self, value, seed: int) -> Scenario:
        base = replace(self.base, seed=seed)
        if self.axis == "budget":
            return replace(base, budget=None, coverage_pct=float(value))
        if self.axis == "tasks":
            return replace(base, initial_tasks=None, tasks_per_node=float(value))
        if self.axis == "cost_ratio":
            # deployment overhead expressed as a multiple of one rpack
            return replace(base, infra_cost=float(value) * base.rpack_cost)
        stages = int(value)
        n_eval = self.eval_stages if self.eval_stages is not None else max(stages, base.eval_stages or stages)
        return replace(base, stages=stages, horizon=max(0, n_eval - stages), eval_stages=n_eval)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        data = dict(data)
        schema = data.pop("schema", None)
        if schema != SWEEP_SCHEMA:
            raise ValueError(f"unsupported sweep schema {schema!r}, expected {SWEEP_SCHEMA!r}")
        base = data.pop("base", {})
        base = Scenario.from_dict({"schema": SCENARIO_SCHEMA, **base})
        known = {f.name for f in fields(cls)} - {"base"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown sweep keys: {', '.join(unknown)}")
        return cls(base=base, **data)

    @classmethod
    def load(cls, path) -> "SweepSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


CSV_COLUMNS = ("kind", "axis", "axis_value", "seed", "algorithm", "status", "gamma_bar_pct", "S_hat",
               "M_hat", "C_util", "dB_hat", "runtime_ms", "gamma_min", "gamma_max", "gamma_std")


@dataclass(frozen=True)
class SweepRow:
    axis: str
    axis_value: float
    seed: int
    algorithm: str
    status: str
    gamma_bar_pct: float = math.nan
    S_hat: float = math.nan
    M_hat: float = math.nan
    C_util: float = math.nan
    dB_hat: float = math.nan
    runtime_ms: float = 0.0


def run_cell(sweep: SweepSpec, value, seed: int) -> list[SweepRow]:
    """All algorithms of one (axis value, seed) cell; failures become status rows."""
    rows = []
    try:
        scenario = sweep.cell_scenario(value, seed)
        inst = scenario.materialize()
    except Exception as exc:  # noqa: BLE001 - recorded, never raised
        status = f"error: {type(exc).__name__}: {exc}"
        return [SweepRow(sweep.axis, value, seed, a, status) for a in sweep.algos]
    for algo in sweep.algos:
        try:
            trace = plan(inst, algo)
            m = metrics(trace, inst.topology)
            rows.append(SweepRow(sweep.axis, value, seed, algo, "ok", m.gamma_bar_pct, m.S_hat,
                                 m.M_hat, m.C_util, m.dB_hat,
                                 trace.runtime_ms if sweep.timing else 0.0))
        except Exception as exc:  # noqa: BLE001
            rows.append(SweepRow(sweep.axis, value, seed, algo, f"error: {type(exc).__name__}: {exc}"))
    return rows


def _cell(args):
    sweep, value, seed = args
    return run_cell(sweep, value, seed)


def run_sweep(sweep: SweepSpec, jobs: int = 1) -> list[SweepRow]:
    """Every axis value x repetition x algorithm, ordered by (value, seed, algorithm)."""
    cells = [(sweep, v, sweep.base.seed + r) for v in sweep.values for r in range(sweep.repetitions)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell, cells))
    else:
        results = [_cell(c) for c in cells]
    order = {a: i for i, a in enumerate(sweep.algos)}
    rows = [row for cell in results for row in cell]
    rows.sort(key=lambda r: (r.axis_value, r.seed, order[r.algorithm]))
    return rows


@dataclass(frozen=True)
class SummaryRow:
    axis: str
    axis_value: float
    algorithm: str
    runs: int
    mean: dict
    gamma_min: float
    gamma_max: float
    gamma_std: float


def summarize(rows: list[SweepRow], algorithms) -> list[SummaryRow]:
    out = []
    values = sorted({r.axis_value for r in rows})
    for v in values:
        for a in algorithms:
            ok = [r for r in rows if r.axis_value == v and r.algorithm == a and r.status == "ok"]
            if not ok:
                continue
            mean = {k: statistics.fmean(getattr(r, k) for r in ok)
                    for k in ("gamma_bar_pct", "S_hat", "M_hat", "C_util", "dB_hat", "runtime_ms")}
            gammas = [r.gamma_bar_pct for r in ok]
            std = statistics.stdev(gammas) if len(gammas) > 1 else 0.0
            out.append(SummaryRow(ok[0].axis, v, a, len(ok), mean, min(gammas), max(gammas), std))
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return f"{x:.6f}"
    return str(x)


def write_csv(rows: list[SweepRow], algorithms, fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(v) for v in ("data", r.axis, r.axis_value, r.seed, r.algorithm, r.status,
                                           r.gamma_bar_pct, r.S_hat, r.M_hat, r.C_util, r.dB_hat,
                                           r.runtime_ms, "", "", "")])
    for s in summarize(rows, algorithms):
        m = s.mean
        writer.writerow([_fmt(v) for v in ("summary", s.axis, s.axis_value, "", s.algorithm, f"ok:{s.runs}",
                                           m["gamma_bar_pct"], m["S_hat"], m["M_hat"], m["C_util"],
                                           m["dB_hat"], m["runtime_ms"], s.gamma_min, s.gamma_max,
                                           s.gamma_std)])


def mean_gamma(rows: list[SweepRow]) -> dict[tuple[float, str], float]:
    """Mean Γ̄% per (axis value, algorithm) over successful runs."""
    acc: dict[tuple[float, str], list[float]] = {}
    for r in rows:
        if r.status == "ok":
            acc.setdefault((r.axis_value, r.algorithm), []).append(r.gamma_bar_pct)
    return {k: statistics.fmean(v) for k, v in sorted(acc.items())}
