"""Network graph, shortest-path table and the routing / completion delay model.

Units are SI throughout: bits, bits per second, seconds and meters.
"""
from __future__ import annotations

import heapq
import io
from dataclasses import dataclass, field
from typing import Iterable, TextIO


@dataclass(frozen=True)
class Link:
    i: int
    j: int
    length_m: float
    rate_bps: float


@dataclass(frozen=True)
class Topology:
    """Undirected MEC graph: access points plus one cloud node.

    ``prop_ap_ap`` / ``prop_ap_cloud`` are optional fixed one-way propagation
    delays per endpoint class; when set they replace ``distance / speed``.
    """

    nodes: tuple[int, ...]
    cloud: int
    links: tuple[Link, ...]
    propagation_speed: float = 2e8
    prop_ap_ap: float | None = None
    prop_ap_cloud: float | None = None
    _adj: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = set(self.nodes)
        if len(nodes) != len(self.nodes):
            raise ValueError("duplicate node ids")
        if self.cloud not in nodes:
            raise ValueError(f"cloud node {self.cloud} is not in the node set")
        if not self.propagation_speed > 0:
            raise ValueError("propagation speed must be positive")
        for name in ("prop_ap_ap", "prop_ap_cloud"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0")
        seen = set()
        adj = {n: [] for n in self.nodes}
        for link in self.links:
            if link.i not in nodes or link.j not in nodes:
                raise ValueError(f"link ({link.i}, {link.j}) references an unknown node")
            if link.i == link.j:
                raise ValueError(f"self loop on node {link.i}")
            if not link.rate_bps > 0:
                raise ValueError(f"link ({link.i}, {link.j}) has non-positive rate")
            if link.length_m < 0:
                raise ValueError(f"link ({link.i}, {link.j}) has negative length")
            key = (min(link.i, link.j), max(link.i, link.j))
            if key in seen:
                raise ValueError(f"more than one link between {key[0]} and {key[1]}")
            seen.add(key)
            adj[link.i].append((link.j, link))
            adj[link.j].append((link.i, link))
        for n in adj:
            adj[n].sort(key=lambda item: item[0])
        object.__setattr__(self, "_adj", adj)

    @property
    def aps(self) -> tuple[int, ...]:
        return tuple(sorted(n for n in self.nodes if n != self.cloud))

    def neighbors(self, node: int):
        return self._adj[node]

    def link(self, i: int, j: int) -> Link:
        for nbr, link in self._adj[i]:
            if nbr == j:
                return link
        raise KeyError((i, j))

    def propagation(self, u: int, v: int, distance: float) -> float:
        if u == v:
            return 0.0
        if self.cloud in (u, v):
            if self.prop_ap_cloud is not None:
                return self.prop_ap_cloud
        elif self.prop_ap_ap is not None:
            return self.prop_ap_ap
        return distance / self.propagation_speed

    def edge_weight(self, link: Link) -> float:
        # delay of a 1-bit payload: transmission plus distance propagation
        return 1.0 / link.rate_bps + link.length_m / self.propagation_speed

    # -- text format -------------------------------------------------------

    def dump(self, fh: TextIO) -> None:
        fh.write(f"nodes {len(self.nodes)} cloud {self.cloud}\n")
        if self.propagation_speed != 2e8:
            fh.write(f"speed {self.propagation_speed!r}\n")
        if self.prop_ap_ap is not None:
            fh.write(f"prop_ap_ap {self.prop_ap_ap!r}\n")
        if self.prop_ap_cloud is not None:
            fh.write(f"prop_ap_cloud {self.prop_ap_cloud!r}\n")
        for link in self.links:
            fh.write(f"link {link.i} {link.j} {link.length_m!r} {link.rate_bps!r}\n")

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()

    @classmethod
    def parse(cls, lines: Iterable[str]) -> "Topology":
        n_nodes = cloud = None
        links = []
        opts = {}
        for lineno, raw in enumerate(lines, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "nodes":
                    if len(parts) != 4 or parts[2] != "cloud":
                        raise ValueError("expected 'nodes N cloud <id>'")
                    n_nodes, cloud = int(parts[1]), int(parts[3])
                elif parts[0] == "link":
                    if len(parts) != 5:
                        raise ValueError("expected 'link i j length_m rate_bps'")
                    links.append(Link(int(parts[1]), int(parts[2]), float(parts[3]), float(parts[4])))
                elif parts[0] in ("prop_ap_ap", "prop_ap_cloud"):
                    opts[parts[0]] = float(parts[1])
                elif parts[0] == "speed":
                    opts["propagation_speed"] = float(parts[1])
                else:
                    raise ValueError(f"unknown directive {parts[0]!r}")
            except (ValueError, IndexError) as exc:
                raise ValueError(f"topology line {lineno}: {exc}") from None
        if n_nodes is None:
            raise ValueError("topology is missing the 'nodes' header")
        return cls(nodes=tuple(range(n_nodes)), cloud=cloud, links=tuple(links), **opts)

    @classmethod
    def loads(cls, text: str) -> "Topology":
        return cls.parse(text.splitlines())

    @classmethod
    def load(cls, path) -> "Topology":
        with open(path) as fh:
            return cls.parse(fh)


@dataclass(frozen=True)
class PathEntry:
    nodes: tuple[int, ...]
    distance: float  # meters
    inv_rate: float  # sum of 1/rate over the links, seconds per bit
    propagation: float  # one-way propagation delay, seconds

    @property
    def links(self) -> list[tuple[int, int]]:
        return list(zip(self.nodes, self.nodes[1:]))


class PathTable:
    """All-pairs shortest paths under :meth:`Topology.edge_weight`.

    Equal-cost paths are broken by the lexicographically smallest node
    sequence, which keeps the table identical across runs.
    """

    def __init__(self, topology: Topology):
        self.topology = topology
        self._entries: dict[tuple[int, int], PathEntry] = {}
        for src in sorted(topology.nodes):
            self._single_source(src)
        for u in topology.nodes:
            for v in topology.nodes:
                if (u, v) not in self._entries:
                    raise ValueError(f"topology is disconnected: no path from {u} to {v}")

    def _single_source(self, src: int) -> None:
        topo = self.topology
        best: dict[int, tuple[float, tuple[int, ...]]] = {src: (0.0, (src,))}
        heap = [(0.0, (src,))]
        done = set()
        while heap:
            cost, path = heapq.heappop(heap)
            node = path[-1]
            if node in done or best[node] != (cost, path):
                continue
            done.add(node)
            for nbr, link in topo.neighbors(node):
                if nbr in done:
                    continue
                cand = (cost + topo.edge_weight(link), path + (nbr,))
                if nbr not in best or cand < best[nbr]:
                    best[nbr] = cand
                    heapq.heappush(heap, cand)
        for dst, (_, path) in best.items():
            distance = 0.0
            inv_rate = 0.0
            for a, b in zip(path, path[1:]):
                link = topo.link(a, b)
                distance += link.length_m
                inv_rate += 1.0 / link.rate_bps
            self._entries[(src, dst)] = PathEntry(
                nodes=path,
                distance=distance,
                inv_rate=inv_rate,
                propagation=topo.propagation(src, dst, distance),
            )

    def __getitem__(self, key: tuple[int, int]) -> PathEntry:
        return self._entries[key]

    def __len__(self):
        return len(self._entries)

    def items(self):
        return sorted(self._entries.items())


def build_path_table(topology: Topology) -> PathTable:
    return PathTable(topology)


def routing_delay(entry: PathEntry, payload_bits: float) -> float:
    return entry.propagation + payload_bits * entry.inv_rate


def fraction_delay(paths: PathTable, origin: int, server: int, bits: float,
                   result_ratio: float, server_rate: float) -> float:
    """Completion delay of a ``bits``-sized fraction from ``origin`` run on ``server``.

    Forward routing of the fraction, processing at ``server_rate`` and
    routing of the ``result_ratio * bits`` result back to the origin.
    """
    forward = routing_delay(paths[origin, server], bits)
    back = routing_delay(paths[server, origin], result_ratio * bits)
    return forward + bits / server_rate + back


class DelayModel:
    """Affine completion delay ``slope * bits + offset`` for every (origin, server)."""

    def __init__(self, paths: PathTable, result_ratio: float, edge_rate: float, cloud_rate: float):
        if not 0 <= result_ratio <= 1:
            raise ValueError("result ratio must lie in [0, 1]")
        if not (edge_rate > 0 and cloud_rate > 0):
            raise ValueError("processing rates must be positive")
        self.paths = paths
        self.topology = paths.topology
        self.cloud = self.topology.cloud
        self.result_ratio = result_ratio
        self.edge_rate = edge_rate
        self.cloud_rate = cloud_rate
        self._coef: dict[tuple[int, int], tuple[float, float]] = {}

    def rate(self, server: int) -> float:
        return self.cloud_rate if server == self.cloud else self.edge_rate

    def coefficients(self, origin: int, server: int) -> tuple[float, float]:
        key = (origin, server)
        coef = self._coef.get(key)
        if coef is None:
            fwd = self.paths[origin, server]
            back = self.paths[server, origin]
            slope = fwd.inv_rate + self.result_ratio * back.inv_rate + 1.0 / self.rate(server)
            coef = (slope, fwd.propagation + back.propagation)
            self._coef[key] = coef
        return coef

    def delay(self, origin: int, server: int, bits: float) -> float:
        return fraction_delay(self.paths, origin, server, bits, self.result_ratio, self.rate(server))

    def max_bits(self, origin: int, server: int, limit: float) -> float:
        """Largest fraction whose delay at ``server`` stays within ``limit`` (0 if none)."""
        slope, offset = self.coefficients(origin, server)
        return max(0.0, (limit - offset) / slope)
