"""Multi-stage edge server deployment and upgrade planning."""
from .infrastructure import BudgetLedger, CostModel, ServerState, budget_for_coverage, cost_of
from .offload import max_cloud_fraction
from .planner import ALGORITHMS, Instance, PlanTrace, metrics, plan
from .harness import Scenario, SweepSpec, generate_topology, run_sweep
from .topology import DelayModel, PathTable, Topology, build_path_table, fraction_delay, routing_delay
from .workload import GrowthParams, Task, TaskSpec, evolve, generate_initial

__all__ = [
    "ALGORITHMS", "BudgetLedger", "CostModel", "DelayModel", "GrowthParams", "Instance", "PathTable",
    "PlanTrace", "Scenario", "ServerState", "SweepSpec", "Task", "TaskSpec", "Topology",
    "budget_for_coverage", "build_path_table", "cost_of", "evolve", "fraction_delay", "generate_initial",
    "generate_topology", "max_cloud_fraction", "metrics", "plan", "routing_delay", "run_sweep",
]
