from dataclasses import replace

from mesu.checker import check_trace, recompute_delay
from mesu.harness import Scenario
from mesu.offload import Fraction
from mesu.planner import plan


def setup():
    inst = Scenario(topology="8N12E", stages=2, seed=3).materialize()
    return inst, plan(inst, "H")


def test_clean_trace():
    inst, trace = setup()
    assert check_trace(trace, inst) == []


def test_delay_recomputed_from_links():
    inst, _ = setup()
    for s in inst.topology.nodes:
        assert abs(recompute_delay(inst, 0, s, 3e9) - inst.model.delay(0, s, 3e9)) < 1e-12


def test_tampered_fraction_detected():
    inst, trace = setup()
    rec = trace.records[0]
    f = rec.assignment.fractions[0]
    rec.assignment.fractions[0] = Fraction(f.task, f.server, f.size * 0.5, f.delay)
    errors = check_trace(trace, inst)
    assert any("stored delay" in e for e in errors)
    assert any("sum to" in e for e in errors)


def test_overspend_detected():
    inst, trace = setup()
    rec = trace.records[0]
    assert rec.actions, "scenario should buy something in stage 1"
    rec.actions.append(replace(rec.actions[0], node=rec.actions[0].node))
    assert any("second deployment" in e or "would hold" in e or "exceeds" in e for e in check_trace(trace, inst))


def test_overload_detected():
    inst, trace = setup()
    rec = trace.records[0]
    node = next(s for s, m in rec.rpacks.items() if m > 0)
    task = rec.tasks[0]
    big = 100 * inst.capacity
    rec.assignment.fractions.append(Fraction(task.id, node, big, inst.model.delay(task.origin, node, big)))
    assert any("over capacity" in e for e in check_trace(trace, inst))


def test_false_satisfaction_detected():
    inst = Scenario(topology="8N12E", stages=2, seed=3, coverage_pct=20).materialize()
    trace = plan(inst, "H")
    rec = trace.records[-1]
    missing = [t.id for t in rec.tasks if t.id not in rec.assignment.satisfied]
    assert missing
    rec.assignment.satisfied.add(missing[0])
    assert any("marked satisfied" in e for e in check_trace(trace, inst))
