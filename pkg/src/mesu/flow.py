"""Integer max-flow (Dinic) and the task-to-server transportation feasibility test."""
from __future__ import annotations

import math
from collections import deque

# flows are exact integers in units of 1e-3 bit
SCALE = 1000


class Dinic:
    def __init__(self, n: int):
        self.n = n
        self.graph: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, cap: int) -> int:
        self.graph[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(cap)
        self.graph[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)
        return len(self.to) - 2

    def flow_on(self, edge: int) -> int:
        return self.cap[edge ^ 1]

    def _bfs(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.graph[u]:
                if self.cap[e] > 0 and level[self.to[e]] < 0:
                    level[self.to[e]] = level[u] + 1
                    queue.append(self.to[e])
        return level if level[t] >= 0 else None

    def _dfs(self, u: int, t: int, pushed: int, level, it) -> int:
        if u == t:
            return pushed
        adj = self.graph[u]
        while it[u] < len(adj):
            e = adj[it[u]]
            v = self.to[e]
            if self.cap[e] > 0 and level[v] == level[u] + 1:
                got = self._dfs(v, t, min(pushed, self.cap[e]), level, it)
                if got:
                    self.cap[e] -= got
                    self.cap[e ^ 1] += got
                    return got
            it[u] += 1
        return 0

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        while True:
            level = self._bfs(s, t)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                pushed = self._dfs(s, t, math.inf, level, it)
                if not pushed:
                    break
                total += pushed


def to_units(bits: float, up: bool) -> int:
    x = bits * SCALE
    return int(math.ceil(x - 1e-6)) if up else int(math.floor(x + 1e-6))


def transport(demands: dict[int, float], capacities: dict[int, float],
              arcs: dict[tuple[int, int], float]) -> tuple[bool, int, int, dict[tuple[int, int], float]]:
    """Can every demand be routed over ``arcs`` (per-arc caps) into the server capacities?

    Demands round down and capacities round up to the 1e-3-bit grid.
    Returns (feasible, flow, total demand, per-arc flow in bits).
    """
    tasks = sorted(demands)
    servers = sorted(capacities)
    t_idx = {k: 1 + i for i, k in enumerate(tasks)}
    s_idx = {s: 1 + len(tasks) + j for j, s in enumerate(servers)}
    sink = 1 + len(tasks) + len(servers)
    net = Dinic(sink + 1)
    need = 0
    for k in tasks:
        d = to_units(demands[k], up=False)
        need += d
        net.add_edge(0, t_idx[k], d)
    for s in servers:
        net.add_edge(s_idx[s], sink, to_units(capacities[s], up=True))
    edges = {}
    for (k, s), cap in sorted(arcs.items()):
        if k in t_idx and s in s_idx and cap > 0:
            edges[(k, s)] = net.add_edge(t_idx[k], s_idx[s], to_units(cap, up=True))
    flow = net.max_flow(0, sink)
    per_arc = {key: net.flow_on(e) / SCALE for key, e in edges.items() if net.flow_on(e) > 0}
    return flow == need, flow, need, per_arc
