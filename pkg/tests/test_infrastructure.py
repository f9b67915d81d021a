import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesu.infrastructure import (DEPLOY, UPGRADE, Action, BudgetLedger, CostModel, DuplicateDeployment,
                                 InsufficientBudget, ServerState, budget_for_coverage, cost_of)


def test_full_server_price():
    assert cost_of(Action(DEPLOY, 0, 4), 1, CostModel(), 4) == 1000


def test_single_rpack_upgrade():
    assert cost_of(Action(UPGRADE, 0, 1), 1, CostModel(), 4, installed=2) == 100


def test_depreciated_deploy():
    assert cost_of(Action(DEPLOY, 0, 2), 2, CostModel(depreciation=0.2), 4) == pytest.approx(640)


def test_rpack_count_out_of_range():
    with pytest.raises(ValueError):
        cost_of(Action(DEPLOY, 0, 5), 1, CostModel(), 4)
    with pytest.raises(ValueError):
        cost_of(Action(UPGRADE, 0, 3), 1, CostModel(), 4, installed=2)


@pytest.mark.parametrize("nodes,expected", [(25, 18750), (50, 37500), (100, 75000)])
def test_coverage_budget(nodes, expected):
    assert budget_for_coverage(nodes, 75, CostModel(), 4) == pytest.approx(expected)


def test_zero_coverage():
    assert budget_for_coverage(25, 0, CostModel(), 4) == 0


def test_second_deploy_rejected():
    ledger = BudgetLedger(5000, 1, CostModel(), 4)
    ledger.open_stage(1)
    ledger.commit(Action(DEPLOY, 3, 1))
    with pytest.raises(DuplicateDeployment):
        ledger.commit(Action(DEPLOY, 3, 1))


def test_exact_spend_leaves_nothing():
    ledger = BudgetLedger(1000, 1, CostModel(), 4)
    assert ledger.open_stage(1) == 1000
    ledger.commit(Action(DEPLOY, 0, 4))
    assert ledger.close_stage() == 0


def test_carryover():
    ledger = BudgetLedger(2000, 2, CostModel(depreciation=0.0), 4)
    ledger.open_stage(1)
    ledger.commit(Action(DEPLOY, 0, 1))
    ledger.commit(Action(UPGRADE, 0, 1), installed=1)
    assert ledger.close_stage() == pytest.approx(200)
    ledger.open_stage(2)
    assert ledger.available[2] == pytest.approx(1200)


def test_carryover_1300():
    costs = CostModel(infra_cost=600, rpack_cost=100, depreciation=0.0)
    ledger = BudgetLedger(2000, 2, costs, 4)
    ledger.open_stage(1)
    ledger.commit(Action(DEPLOY, 0, 1))
    ledger.close_stage()
    assert ledger.open_stage(2) == pytest.approx(1300)


def test_overspend_rejected():
    ledger = BudgetLedger(900, 1, CostModel(), 4)
    ledger.open_stage(1)
    with pytest.raises(InsufficientBudget):
        ledger.commit(Action(DEPLOY, 0, 4))


def test_ledger_csv():
    ledger = BudgetLedger(1000, 1, CostModel(), 4)
    ledger.open_stage(1)
    ledger.commit(Action(DEPLOY, 2, 1))
    buf = io.StringIO()
    ledger.dump_csv(buf)
    assert buf.getvalue().splitlines()[1].startswith("1,2,deploy,1,700")


def test_server_capacity():
    srv = ServerState(0, 10e9, 4)
    srv.install(1, 2)
    srv.add_load(15e9)
    assert srv.residual == pytest.approx(5e9)
    with pytest.raises(RuntimeError):
        srv.add_load(6e9)
    with pytest.raises(ValueError):
        srv.install(2, 3)


@settings(max_examples=80, deadline=None)
@given(phi=st.floats(0, 0.9), seed_actions=st.lists(st.tuples(st.integers(0, 4), st.integers(1, 4)),
                                                    max_size=12),
       total=st.floats(0, 20_000), stages=st.integers(1, 4))
def test_ledger_conservation(phi, seed_actions, total, stages):
    costs = CostModel(depreciation=phi)
    ledger = BudgetLedger(total, stages, costs, 4)
    rpacks = {}
    spent = 0.0
    it = iter(seed_actions)
    for t in range(1, stages + 1):
        avail = ledger.open_stage(t)
        for node, m in it:
            have = rpacks.get(node, 0)
            action = Action(DEPLOY, node, m) if have == 0 else Action(UPGRADE, node, min(m, 4 - have))
            if action.rpacks < 1:
                continue
            price = cost_of(action, t, costs, 4, have)
            if not ledger.affordable(price):
                break
            ledger.commit(action, installed=have)
            rpacks[node] = have + action.rpacks
            spent += price
        left = ledger.close_stage()
        assert left >= 0
        assert left == pytest.approx(avail - ledger.spent(t), abs=1e-6)
    assert spent + ledger.carryover[stages] == pytest.approx(total, abs=1e-6)
