"""Proactive engine: a general hands out scenarios (walk-and-synchronize,
search-and-destroy, multi-block construction) and soldiers follow them
through goal automata."""

from .automaton import ScenarioAutomaton, step_automaton
from .general import GeneralState, Order, Report, Scenario, general_dispatch
from .placements import PlacementError, RoleAssignment, plan_block_placements
from .team import DeSouchesTeam, ScenarioConfig

__all__ = [
    "DeSouchesTeam", "GeneralState", "Order", "PlacementError", "Report", "RoleAssignment",
    "Scenario", "ScenarioAutomaton", "ScenarioConfig", "general_dispatch", "plan_block_placements",
    "step_automaton",
]
