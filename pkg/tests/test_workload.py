import io
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesu.workload import (GB, GrowthParams, Task, TaskSpec, dump_workloads, evolve, generate_initial,
                           load_workloads, predicted, round_half_up, stage_sequence)

APS = (0, 1, 2, 3)


def test_empty_workload():
    assert len(generate_initial(APS, 0)) == 0


def test_no_access_points():
    with pytest.raises(ValueError):
        generate_initial((), 5)


def test_generation_is_deterministic():
    a = generate_initial(APS, 100, seed=11)
    b = generate_initial(APS, 100, seed=11)
    assert a.tasks == b.tasks
    assert a.tasks != generate_initial(APS, 100, seed=12).tasks


def test_flag_counts_are_floor_of_share():
    w = generate_initial(APS, 100, growth=GrowthParams(size_share=0.2, deadline_share=0.2), seed=3)
    assert sum(t.grows for t in w.tasks) == 20
    assert sum(t.tightens for t in w.tasks) == 20


def test_six_tasks_grow_to_nine():
    w = generate_initial(APS, 6, seed=0)
    assert len(evolve(w).tasks) == 9


def test_flagged_size_grows():
    w = generate_initial(APS, 10, growth=GrowthParams(size_share=1.0, deadline_share=0.0),
                         spec=TaskSpec(sizes=(10 * GB,)), seed=0)
    nxt = evolve(w)
    assert all(t.size == pytest.approx(15 * GB) for t in nxt.tasks[:10])


def test_flagged_deadline_tightens_twice():
    w = generate_initial(APS, 4, growth=GrowthParams(size_share=0.0, deadline_share=1.0),
                         spec=TaskSpec(deadlines=(10.0,)), seed=0)
    third = evolve(evolve(w))
    assert third.tasks[0].deadline == pytest.approx(2.5)


def test_tolerance_draws():
    w = generate_initial(APS, 400, seed=9)
    sigmas = [t.sigma for t in w.tasks]
    hard = sum(s == 1.0 for s in sigmas)
    assert 150 < hard < 250
    assert all(s == 1.0 or 1.5 <= s <= 3.0 for s in sigmas)


def test_task_validation():
    with pytest.raises(ValueError):
        Task(0, 0, 1.0, 0.0)
    with pytest.raises(ValueError):
        Task(0, 0, 1.0, 1.0, sigma=0.5)
    assert Task(0, 0, 4.0, 1.0, sigma=1.5).limit == 6.0


def test_prediction_matches_later_stage():
    g = GrowthParams(horizon=2)
    w = generate_initial(APS, 10, growth=g, seed=4)
    seq = stage_sequence(w, 4)
    ahead = predicted(seq[1], 2)
    assert ahead.stage == 2 and ahead.demand_stage == 4 and ahead.predicted
    assert ahead.tasks == seq[3].tasks
    assert evolve(w, predict=True).tasks == seq[3].tasks


def test_csv_roundtrip():
    seq = stage_sequence(generate_initial(APS, 7, seed=2), 3)
    buf = io.StringIO()
    dump_workloads(seq, buf)
    back = load_workloads(io.StringIO(buf.getvalue()))
    for w in seq:
        assert [replace(t, base_size=None, base_deadline=None) for t in w.tasks] == \
            [replace(t, base_size=None, base_deadline=None) for t in back[w.stage]]
        assert [(t.size, t.deadline) for t in w.tasks] == [(t.size, t.deadline) for t in back[w.stage]]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 60), mu=st.sampled_from([0.0, 0.25, 0.5, 1.0]), seed=st.integers(0, 99),
       stages=st.integers(1, 5))
def test_population_invariants(n, mu, seed, stages):
    g = GrowthParams(task_growth=mu)
    seq = stage_sequence(generate_initial(APS, n, growth=g, seed=seed), stages)
    for t, w in enumerate(seq, start=1):
        assert len(w.tasks) == round_half_up((1 + mu) ** (t - 1) * n)
        assert [task.id for task in w.tasks] == list(range(len(w.tasks)))
        assert all(task.origin in APS for task in w.tasks)
        if t > 1:
            prev = seq[t - 2].tasks
            assert [x.base_size for x in w.tasks[:len(prev)]] == [x.base_size for x in prev]
            assert all(x.size >= p.size and x.deadline <= p.deadline for x, p in zip(w.tasks, prev))
        assert sum(task.grows for task in w.tasks) == int(0.2 * len(w.tasks) + 1e-9)
