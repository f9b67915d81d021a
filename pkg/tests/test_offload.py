import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesu.infrastructure import ServerState
from mesu.offload import (StageState, max_cloud_fraction, offload_cluster, offload_fractions,
                          offload_to_cloud, reduce_via_cloud, within)
from mesu.topology import DelayModel, PathTable

from conftest import star, task


def model_of(topo):
    return DelayModel(PathTable(topo), 0.1, 10e9, 10e9)


def state_of(topo, tasks, servers=None):
    return StageState(1, tasks, servers or {}, model_of(topo))


def test_cloud_share_charges_both_propagation_legs(two_node):
    # (3 - 2*0.05) / (1/2e9 + 0.1/2e9 + 1/10e9)
    share = max_cloud_fraction(task(0, 0, 30, 3.0), model_of(two_node))
    assert share == pytest.approx(2.9 / 0.65e-9)
    assert share == pytest.approx(4.4615e9, rel=1e-4)


def test_cloud_share_zero_below_round_trip(two_node):
    assert max_cloud_fraction(task(0, 0, 10, 0.09), model_of(two_node)) == 0.0


def test_cloud_share_clamped_to_size(two_node):
    assert max_cloud_fraction(task(0, 0, 1, 1000.0), model_of(two_node)) == 1e9


def test_whole_task_cloud_offload(two_node):
    st_ = state_of(two_node, [task(0, 0, 1, 1.0), task(1, 0, 1, 10.0), task(2, 0, 10, 3.0)])
    assert offload_to_cloud(st_) == 2
    assert st_.pending == [2]
    assert st_.satisfied == {0, 1}


def test_cloud_offload_of_nothing(two_node):
    st_ = state_of(two_node, [])
    assert offload_to_cloud(st_) == 0 and st_.pending == []


def test_drain_marks_nothing(two_node):
    st_ = state_of(two_node, [task(0, 0, 10, 3.0)])
    reduce_via_cloud(st_)
    assert offload_to_cloud(st_, mark_satisfied=False) == 0
    assert [f.size for f in st_.fractions[0]] == [10e9]
    assert not st_.satisfied


def test_reduction_leaves_edge_residual(two_node):
    st_ = state_of(two_node, [task(0, 0, 10, 3.0), task(1, 0, 10, 3.0), task(2, 0, 10, 0.05)])
    reduce_via_cloud(st_)
    assert st_.residual[0] == pytest.approx(10e9 - 2.9 / 0.65e-9)
    assert st_.residual[0] == st_.residual[1]
    assert st_.residual[2] == 10e9 and st_.fractions[2] == []


def test_exact_fit_commits():
    topo = star(2)
    srv = ServerState(0, 10e9, 4, rpacks=1)
    st_ = state_of(topo, [task(0, 0, 10, 1.0)], {0: srv})
    assert offload_fractions(st_) == 1
    assert srv.residual == 0.0


def test_partial_placement_rolls_back():
    # 10 Gb fit locally in 1 s; the 2 Gb remainder over a 1 Gb/s link needs 2.4 s at node 1
    topo = star(2, ap_rate=1e9)
    servers = {0: ServerState(0, 10e9, 4, rpacks=1), 1: ServerState(1, 10e9, 4, rpacks=1)}
    st_ = state_of(topo, [task(0, 0, 12, 1.05)], servers)
    assert offload_fractions(st_) == 0
    assert servers[0].load == 0.0 and servers[1].load == 0.0
    assert st_.pending == [0]


def test_split_over_two_servers():
    topo = star(2)
    servers = {0: ServerState(0, 5e9, 4, rpacks=1), 1: ServerState(1, 3e9, 4, rpacks=1)}
    st_ = state_of(topo, [task(0, 0, 8, 2.0)], servers)
    assert offload_fractions(st_) == 1
    parts = {f.server: f for f in st_.fractions[0]}
    assert parts[0].size == 5e9 and parts[1].size == 3e9
    assert parts[0].delay == pytest.approx(0.5)
    assert parts[1].delay == pytest.approx(3e9 / 20e9 + 3e9 / 10e9 + 0.1 * 3e9 / 20e9)


def test_empty_cluster(two_node):
    srv = ServerState(0, 10e9, 4, rpacks=1)
    st_ = state_of(two_node, [task(0, 0, 5, 1.0)], {0: srv})
    assert offload_cluster(st_, [], 0) == 0 and srv.load == 0


def test_cluster_fills_server():
    topo = star(2)
    srv = ServerState(1, 10e9, 4, rpacks=2)
    tasks = [task(0, 0, 5, 5.0), task(1, 1, 7, 5.0), task(2, 0, 8, 5.0)]
    st_ = state_of(topo, tasks, {1: srv})
    assert offload_cluster(st_, [0, 1, 2], 1) == 3
    assert srv.residual == 0.0
    model = st_.model
    for k in (0, 2):
        f = st_.fractions[k][-1]
        assert f.delay == pytest.approx(model.delay(0, 1, f.size))
        assert within(f.delay, tasks[k].limit)


def test_cluster_deadline_violation_aborts():
    topo = star(2)
    srv = ServerState(1, 10e9, 4, rpacks=4)
    st_ = state_of(topo, [task(0, 0, 10, 0.5)], {1: srv})
    with pytest.raises(RuntimeError):
        offload_cluster(st_, [0], 1)


@settings(max_examples=60, deadline=None)
@given(sizes=st.lists(st.integers(1, 30), min_size=1, max_size=12),
       deadlines=st.lists(st.sampled_from([0.5, 1.0, 2.0, 3.0, 5.0]), min_size=12, max_size=12),
       rpacks=st.lists(st.integers(0, 4), min_size=3, max_size=3))
def test_fractional_offload_invariants(sizes, deadlines, rpacks):
    topo = star(3, mesh=False)
    servers = {s: ServerState(s, 10e9, 4, rpacks=m) for s, m in enumerate(rpacks) if m}
    tasks = [task(k, k % 3, b, deadlines[k]) for k, b in enumerate(sizes)]
    st_ = state_of(topo, tasks, servers)
    offload_to_cloud(st_)
    reduce_via_cloud(st_)
    offload_fractions(st_)
    offload_to_cloud(st_, mark_satisfied=False)
    for srv in servers.values():
        assert srv.load <= srv.capacity * (1 + 1e-9)
    for t in tasks:
        parts = st_.fractions[t.id]
        assert sum(f.size for f in parts) == pytest.approx(t.size)
        assert len({f.server for f in parts}) == len(parts)
        if t.id in st_.satisfied:
            assert all(within(f.delay, t.limit) for f in parts)
    assert sum(f.size for fs in st_.fractions.values() for f in fs if f.server != 3) == \
        pytest.approx(sum(s.load for s in servers.values()))
