import itertools
import random

import pytest

from mapcsim import actions as A
from mapcsim.beliefs import GroupMap
from mapcsim.desouches import (DeSouchesTeam, GeneralState, PlacementError, Report, ScenarioAutomaton,
                               ScenarioConfig, general_dispatch, plan_block_placements, step_automaton)
from mapcsim.desouches import automaton as fsm
from mapcsim.desouches.general import BLOCKS, SEARCH_DESTROY, WALK_SYNC
from mapcsim.desouches.goals import search_destroy_goal, walk_sync_goal
from mapcsim.geometry import DIRS, add, manhattan, sub
from mapcsim.shapes import TaskShape, enumerate_layouts
from mapcsim.sync import SyncRegistry, merge_groups
from mapcsim.world import AgentEntity, all_percepts, step_world

from conftest import attach_block, make_world, task
from helpers import known_map

# -- automaton ----------------------------------------------------------------------


def _run(auto, events):
    for ev in events:
        auto, _ = step_automaton(auto, ev)
    return auto


def test_commander_connect_then_submit():
    auto = ScenarioAutomaton("commander", state=fsm.CONNECT)
    auto, goal = step_automaton(auto, fsm.SUCCEEDED)
    assert auto.state == fsm.SUBMIT and goal == fsm.SUBMIT


def test_lieutenant_connect_then_detach_then_done():
    auto = ScenarioAutomaton("lieutenant", 1, state=fsm.CONNECT)
    auto = _run(auto, [fsm.SUCCEEDED])
    assert auto.state == fsm.DETACH
    assert _run(auto, [fsm.SUCCEEDED]).state == fsm.DONE


@pytest.mark.parametrize("state", [s for s in fsm.STATES if s not in (fsm.DONE, fsm.FAILED)])
def test_block_lost_restarts(state):
    role = "lieutenant" if state == fsm.DETACH else "commander"
    auto, goal = step_automaton(ScenarioAutomaton(role, state=state), fsm.BLOCK_LOST)
    assert auto.state == fsm.GO_TO_DISPENSER and goal == fsm.GO_TO_DISPENSER


def test_dispenser_failure_detours_first():
    auto, goal = step_automaton(ScenarioAutomaton("commander"), fsm.GOAL_FAILED)
    assert goal == fsm.RANDOM_WALK and auto.state == fsm.GO_TO_DISPENSER
    auto, goal = step_automaton(auto, fsm.SUCCEEDED)
    assert goal == fsm.GO_TO_DISPENSER


def test_other_failures_retry_same_goal():
    auto, goal = step_automaton(ScenarioAutomaton("commander", state=fsm.GO_TO_GOAL), fsm.GOAL_FAILED)
    assert goal == fsm.GO_TO_GOAL and auto.failures == 1


def test_retry_cap_fails():
    auto = _run(ScenarioAutomaton("commander", state=fsm.ROTATE_BLOCK), [fsm.GOAL_FAILED] * fsm.RETRY_CAP)
    assert auto.state == fsm.FAILED


def _reachable(role):
    """Every automaton reachable from the start plus the longest event chain."""
    start = ScenarioAutomaton(role, 1 if role == "lieutenant" else 0)
    longest = {}

    def depth(a):
        if a.finished:
            return 0
        if a in longest:
            if longest[a] is None:
                raise AssertionError(f"cycle through {a}")
            return longest[a]
        longest[a] = None
        best = 1 + max(depth(step_automaton(a, ev)[0]) for ev in fsm.EVENTS)
        longest[a] = best
        return best

    return start, depth(start), longest


@pytest.mark.parametrize("role", ["commander", "lieutenant"])
def test_transition_walk_terminates(role):
    _, bound, seen = _reachable(role)
    assert 0 < bound < 1000
    states = {a.state for a in seen} | {fsm.DONE, fsm.FAILED}
    if role == "lieutenant":
        assert fsm.SUBMIT not in states
        assert all(a.goal != fsm.SUBMIT for a in seen)
    else:
        assert fsm.DETACH not in states


def test_unknown_event_rejected():
    with pytest.raises(ValueError):
        step_automaton(ScenarioAutomaton("commander"), "exploded")


# -- placements ---------------------------------------------------------------------


def replay_construction(shape, roles):
    """Build the roles in an empty world and report whether the commander's
    submit succeeds after every lieutenant connects and detaches."""
    origin = (8, 8)
    w = make_world(18, 18, goals={origin}, tasks=[task("t", shape.entries, deadline=999)])
    for i, r in enumerate(roles, start=1):
        w.add_agent(AgentEntity(i, "A", add(origin, r.goal_offset), w.params.max_energy))
        attach_block(w, i, add(origin, r.block_offset), r.block_type)
    for i, r in enumerate(roles[1:], start=2):
        acts = {1: A.connect(i, r.connect_to, r.block_offset),
                i: A.connect(1, r.block_rel, sub(r.connect_to, r.goal_offset))}
        step_world(w, acts)
        if w.agents[1].last_result != "success" or w.agents[i].last_result != "success":
            return False
    for i, r in enumerate(roles[1:], start=2):
        step_world(w, {i: A.detach(r.connect_dir)})
        if w.agents[i].last_result != "success":
            return False
    step_world(w, {1: A.submit("t")})
    return w.agents[1].last_result == "success"


def _shapes(k):
    for cells in enumerate_layouts(k):
        cells = sorted(cells)
        for colours in itertools.product(("b0", "b1"), repeat=k):
            yield TaskShape.of(zip(cells, colours))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_every_shape_replays_to_submit(k):
    for shape in _shapes(k):
        roles = plan_block_placements(shape, k)
        assert len(roles) == k
        assert roles[0].role == "commander" and roles[0].goal_offset == (0, 0)
        assert manhattan(roles[0].block_offset) == 1
        stances = [r.goal_offset for r in roles]
        assert len(set(stances)) == k
        assert not set(stances) & set(shape.offsets)
        for r in roles:
            assert manhattan(r.goal_offset, r.block_offset) == 1
            assert DIRS[r.connect_dir] == r.block_rel
        assert replay_construction(shape, roles), shape


def test_vertical_pair_roles():
    shape = TaskShape.of([((0, 1), "b0"), ((0, 2), "b1")])
    cmd, lt = plan_block_placements(shape)
    assert (cmd.block_offset, cmd.block_type, cmd.goal_offset) == ((0, 1), "b0", (0, 0))
    assert lt.goal_offset == (0, 3) and lt.block_type == "b1" and lt.connect_dir == "n"


def test_single_block_is_commander_only():
    roles = plan_block_placements(TaskShape.of([((0, 1), "b0")]))
    assert [r.role for r in roles] == ["commander"]


def test_placement_errors():
    shape = TaskShape.of([((0, 1), "b0"), ((0, 2), "b1")])
    with pytest.raises(PlacementError):
        plan_block_placements(shape, k=3)
    with pytest.raises(PlacementError):
        plan_block_placements(shape, free=lambda c: c == (0, 0) or c == (0, 1))


# -- general ------------------------------------------------------------------------


def _registry(groups):
    reg = SyncRegistry()
    for gid, gm in groups.items():
        reg.groups[gid] = gm
        for a in gm.members:
            reg.agent_to_group[a] = gid
    return reg


def test_initial_dispatch_is_walk_sync():
    reg = SyncRegistry.for_agents([1, 2, 3, 4])
    gs, orders = general_dispatch(GeneralState.for_agents([1, 2, 3, 4]), reg, [])
    assert {a: o.kind for a, o in orders.items()} == {a: WALK_SYNC for a in (1, 2, 3, 4)}
    assert reg.master_group_id is None


def _group_with_resources(gid=1, members=None):
    gm = known_map(12, 12, goals={(6, 6), (7, 6)}, dispensers={(1, 1): "b0", (10, 1): "b1"})
    gm.group_id = gid
    gm.members = members or {1: (2, 2), 2: (3, 2)}
    return gm


def test_blocks_scenario_sets_mastergroup():
    gm = _group_with_resources()
    other = GroupMap.founding(3)
    reg = _registry({1: gm, 3: other})
    t = task("t", [((0, 1), "b0"), ((0, 2), "b1")])
    gs, orders = general_dispatch(GeneralState.for_agents([1, 2, 3]), reg, [t])
    assert orders[1].kind == orders[2].kind == BLOCKS
    assert orders[3].kind == WALK_SYNC
    assert reg.master_group_id == 1 and gs.master == 1
    (sc,) = gs.scenarios.values()
    assert set(sc.members) == {1, 2} and sc.goal in gm.goals()


def test_unknown_dispenser_type_blocks_start():
    gm = _group_with_resources()
    reg = _registry({1: gm})
    t = task("t", [((0, 1), "b0"), ((0, 2), "b9")])
    gs, orders = general_dispatch(GeneralState.for_agents([1, 2]), reg, [t])
    assert gs.scenarios == {} and reg.master_group_id is None


def test_deadline_disbands_and_reassigns():
    gm = _group_with_resources()
    reg = _registry({1: gm})
    t = task("t", [((0, 1), "b0"), ((0, 2), "b1")], deadline=10)
    gs, _ = general_dispatch(GeneralState.for_agents([1, 2]), reg, [t], now=0)
    assert gs.scenarios
    gs, orders = general_dispatch(gs, reg, [], now=11)
    assert gs.scenarios == {}
    assert {o.kind for o in orders.values()} == {SEARCH_DESTROY}
    assert any(e["event"] == "disband" for e in gs.log)


def test_commander_success_closes_scenario():
    gm = _group_with_resources()
    reg = _registry({1: gm})
    t = task("t", [((0, 1), "b0"), ((0, 2), "b1")])
    gs, _ = general_dispatch(GeneralState.for_agents([1, 2]), reg, [t])
    sc = next(iter(gs.scenarios.values()))
    lt = sc.lieutenants()[0]
    gs, _ = general_dispatch(gs, reg, [t], [Report(lt, "success", sc.sid)], now=1)
    assert sc.sid in gs.scenarios
    gs, _ = general_dispatch(gs, reg, [t], [Report(sc.commander, "success", sc.sid)], now=2)
    assert sc.sid not in gs.scenarios
    assert any(e["event"] == "success" for e in gs.log)


def test_mastergroup_survives_merges():
    rng = random.Random(3)
    for _ in range(50):
        n = 6
        reg = SyncRegistry.for_agents(range(1, n + 1))
        master = rng.randint(1, n)
        reg.set_master(master)
        while len(reg.groups) > 1:
            a, b = rng.sample(sorted(reg.agent_to_group), 2)
            if reg.agent_to_group[a] == reg.agent_to_group[b]:
                continue
            reg, _ = merge_groups(reg, a, b, (rng.randint(-5, 5), rng.randint(-5, 5)))
            assert master in reg.groups
        assert reg.master_group_id == master


# -- traversal goals ------------------------------------------------------------------


def test_walk_sync_goal_in_range():
    rng = random.Random(0)
    gm = GroupMap.founding(1)
    for _ in range(200):
        g = walk_sync_goal(gm, (3, 4), rng)
        assert 5 <= manhattan(g, (3, 4)) <= 15


def test_search_destroy_goal():
    gm = known_map(10, 10, obstacles={(5, 5), (1, 1)})
    assert search_destroy_goal(gm, (4, 4), 300, 30) == (5, 5)
    assert search_destroy_goal(gm, (4, 4), 10, 30) is None
    assert search_destroy_goal(known_map(5, 5), (1, 1), 300, 30) is None


def test_config_validation():
    from mapcsim.config import ConfigError

    with pytest.raises(ConfigError):
        ScenarioConfig(walk_min=9, walk_max=3)
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"nope": 1})


# -- end to end -----------------------------------------------------------------------


def scripted_blocks_world():
    return make_world(20, 20, agents=[(1, "A", (4, 4)), (2, "A", (7, 4))],
                      dispensers={(3, 8): "b0", (9, 8): "b1"},
                      goals={(12, 12), (13, 12), (12, 13), (13, 13)},
                      tasks=[task("build", [((0, 1), "b0"), ((0, 2), "b1")], deadline=500)])


def run_scripted_blocks(steps=150, seed=0):
    """Play the scripted two-agent scenario; returns (submit step, action log)."""
    w = scripted_blocks_world()
    team = DeSouchesTeam("A", [1, 2], w.params, seed=seed)
    percepts = all_percepts(w)
    log = []
    for step in range(steps):
        w, percepts, events = step_world(w, team.decide(percepts))
        team.drain_events()
        log.extend(e for e in events if e["type"] == "action")
        if w.scores.get("A"):
            return step, log, team
    return None, log, team


def test_scripted_blocks_scenario_completes():
    done, log, team = run_scripted_blocks()
    assert done is not None and done < 150
    submitters = {e["agent"] for e in log if e["action"]["kind"] == "submit"}
    detachers = {e["agent"] for e in log if e["action"]["kind"] == "detach" and e["result"] == "success"}
    assert len(submitters) == 1
    assert detachers and not (detachers & submitters)
