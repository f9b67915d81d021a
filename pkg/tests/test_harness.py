import csv
import io

import networkx as nx
import pytest

from mesu.harness import (CSV_COLUMNS, Scenario, SweepSpec, generate_topology, mean_gamma, run_sweep,
                          write_csv)


def test_small_spec():
    topo = generate_topology("5N5E", seed=1)
    assert len(topo.nodes) == 5 and topo.cloud == 4
    ap_links = [l for l in topo.links if topo.cloud not in (l.i, l.j)]
    assert len(ap_links) == 5
    g = nx.Graph((l.i, l.j) for l in topo.links)
    assert nx.is_connected(g)
    assert nx.is_connected(g.subgraph(topo.aps))


@pytest.mark.parametrize("spec", ["5N3E", "5N7E", "1N0E", "5x5"])
def test_infeasible_specs(spec):
    with pytest.raises(ValueError):
        generate_topology(spec)


def test_generation_is_reproducible():
    assert generate_topology("20N48E", seed=9).dumps() == generate_topology("20N48E", seed=9).dumps()
    assert generate_topology("20N48E", seed=9).dumps() != generate_topology("20N48E", seed=10).dumps()


def test_scenario_defaults():
    inst = Scenario(topology="25N50E", seed=0).materialize()
    assert inst.budget == pytest.approx(18750)
    assert len(inst.workloads[0].tasks) == 75
    assert inst.horizon == 2 and inst.eval_stages == 3
    assert sum(1 for m in inst.initial.values() if m > 0) == 12
    assert set(inst.initial.values()) == {2}


def test_scenario_json_roundtrip(tmp_path):
    sc = Scenario(topology="8N10E", stages=2, budget=3000.0, coverage_pct=None, seed=4)
    sc.dump(tmp_path / "s.json")
    assert Scenario.load(tmp_path / "s.json") == sc


def test_unknown_scenario_key():
    with pytest.raises(ValueError, match="bogus"):
        Scenario.from_dict({"schema": "mesu.scenario/1", "bogus": 1})


def test_invalid_scenario_values():
    with pytest.raises(ValueError):
        Scenario(stages=0)
    with pytest.raises(ValueError):
        Scenario(algorithms=("H", "ZZ"))


def test_single_cell_sweep():
    sweep = SweepSpec(axis="budget", values=(50,), base=Scenario(topology="6N8E"), repetitions=1,
                      algorithms=("H",), timing=False)
    rows = run_sweep(sweep)
    buf = io.StringIO()
    write_csv(rows, sweep.algos, buf)
    table = list(csv.reader(io.StringIO(buf.getvalue())))
    assert tuple(table[0]) == CSV_COLUMNS
    assert [r[0] for r in table[1:]] == ["data", "summary"]


def test_failures_become_rows():
    # the deploy-only baseline needs two rpacks per server
    sweep = SweepSpec(axis="budget", values=(50,), base=Scenario(topology="6N8E", max_rpacks=1),
                      repetitions=2, algorithms=("H", "DO"))
    rows = run_sweep(sweep)
    assert [r.status for r in rows if r.algorithm == "H"] == ["ok", "ok"]
    assert all(r.status.startswith("error") for r in rows if r.algorithm == "DO")


def test_parallel_sweep_matches_serial():
    sweep = SweepSpec(axis="cost_ratio", values=(2, 6), base=Scenario(topology="6N8E"), repetitions=2,
                      timing=False)
    assert run_sweep(sweep, jobs=2) == run_sweep(sweep, jobs=1)


def test_stage_sweep_cells():
    sweep = SweepSpec(axis="stages", values=(1, 3, 5), eval_stages=5, repetitions=1)
    cells = [sweep.cell_scenario(v, 0) for v in sweep.values]
    assert [(c.stages, c.eval_stages, c.effective_horizon) for c in cells] == [(1, 5, 4), (3, 5, 2), (5, 5, 0)]


def test_budget_sweep_nondecreasing():
    sweep = SweepSpec(axis="budget", values=(20, 60, 100), base=Scenario(topology="10N20E"),
                      repetitions=3, algorithms=("H", "DO"))
    means = mean_gamma(run_sweep(sweep))
    for algo in ("H", "DO"):
        series = [means[(v, algo)] for v in sweep.values]
        assert all(b >= a - 1.0 for a, b in zip(series, series[1:]))
