import networkx as nx
from hypothesis import given, settings
from hypothesis import strategies as st

from mesu.flow import Dinic, transport


def test_dinic_small():
    net = Dinic(4)
    net.add_edge(0, 1, 3)
    net.add_edge(0, 2, 2)
    net.add_edge(1, 2, 5)
    e = net.add_edge(1, 3, 2)
    net.add_edge(2, 3, 3)
    assert net.max_flow(0, 3) == 5
    assert net.flow_on(e) == 2


def test_transport_infeasible_when_capacity_short():
    ok, flow, need, _ = transport({0: 6e9, 1: 6e9}, {5: 10e9}, {(0, 5): 6e9, (1, 5): 6e9})
    assert not ok and need - flow == 2e9 * 1000


def test_transport_split():
    ok, _, _, per_arc = transport({0: 8e9}, {1: 5e9, 2: 3e9}, {(0, 1): 8e9, (0, 2): 8e9})
    assert ok
    assert per_arc[(0, 1)] + per_arc[(0, 2)] == 8e9


@settings(max_examples=80, deadline=None)
@given(n_tasks=st.integers(1, 6), n_servers=st.integers(1, 4), data=st.data())
def test_transport_matches_networkx(n_tasks, n_servers, data):
    dem = {k: data.draw(st.integers(0, 30)) * 1e9 for k in range(n_tasks)}
    caps = {10 + s: data.draw(st.integers(0, 40)) * 1e9 for s in range(n_servers)}
    arcs = {}
    for k in dem:
        for s in caps:
            if data.draw(st.booleans()):
                arcs[(k, s)] = data.draw(st.integers(0, 30)) * 1e9
    ok, flow, need, per_arc = transport(dem, caps, arcs)
    g = nx.DiGraph()
    for k, d in dem.items():
        g.add_edge("src", ("t", k), capacity=d)
    for s, c in caps.items():
        g.add_edge(("s", s), "sink", capacity=c)
    for (k, s), c in arcs.items():
        g.add_edge(("t", k), ("s", s), capacity=c)
    value = nx.maximum_flow_value(g, "src", "sink")
    assert flow / 1000 == value
    assert ok == (value == sum(dem.values()))
    for (k, s), bits in per_arc.items():
        assert bits <= arcs[(k, s)]
