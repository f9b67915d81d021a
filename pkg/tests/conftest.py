import pytest

from mesu.infrastructure import CostModel
from mesu.planner import Instance
from mesu.topology import Link, Topology
from mesu.workload import GB, StageWorkload, Task


def star(n_aps: int, ap_rate=20e9, uplink=2e9, prop_cloud=0.05, mesh=True) -> Topology:
    """APs 0..n-1 fully meshed (or chained), each with its own uplink to cloud n."""
    links = []
    for a in range(n_aps):
        for b in range(a + 1, n_aps):
            if mesh or b == a + 1:
                links.append(Link(a, b, 0.0, ap_rate))
        links.append(Link(a, n_aps, 0.0, uplink))
    return Topology(nodes=tuple(range(n_aps + 1)), cloud=n_aps, links=tuple(links),
                    prop_ap_ap=0.0, prop_ap_cloud=prop_cloud)


def task(k, origin, size_gb, deadline, sigma=1.0) -> Task:
    return Task(id=k, origin=origin, deadline=deadline, size=size_gb * GB, sigma=sigma)


def workload(topo: Topology, tasks, stage=1) -> StageWorkload:
    return StageWorkload(stage=stage, tasks=tuple(tasks), initial_count=len(tasks), seed=0, aps=topo.aps)


def instance(topo: Topology, stage_tasks, budget, stages=None, **kw) -> Instance:
    """Instance whose stage ``t`` demand is ``stage_tasks[t-1]``."""
    works = [workload(topo, ts, stage=t) for t, ts in enumerate(stage_tasks, start=1)]
    kw.setdefault("costs", CostModel())
    return Instance(topology=topo, workloads=works, budget=budget,
                    stages=stages or len(stage_tasks), **kw)


@pytest.fixture
def two_node():
    # one AP (0) and the cloud (1) over a 2 Gb/s uplink with 50 ms propagation
    return star(1)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[tuple[int, str]] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
