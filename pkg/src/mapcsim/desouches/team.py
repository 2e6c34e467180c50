from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass, field
from typing import Any

from .. import actions as A
from ..actions import Action
from ..config import ConfigError, WorldParams
from ..geometry import DIR_ORDER, DIRS, Coord, add, manhattan, rotate, sub
from ..pathfind import a_star
from ..teamcore import AgentView, TeamCore
from ..world import Percept
from . import automaton as fsm
from .automaton import ScenarioAutomaton, step_automaton
from .general import (BLOCKS, SEARCH_DESTROY, GeneralState, Report, Scenario,
                      general_dispatch)
from .goals import WALK_MAX, WALK_MIN, search_destroy_goal, walk_sync_goal

MAX_TRANSITIONS = 8
PATIENCE = 3
SIDESTEP_AFTER = 2


@dataclass
class ScenarioConfig:
    walk_min: int = WALK_MIN
    walk_max: int = WALK_MAX
    retry_cap: int = fsm.RETRY_CAP
    restart_cap: int = fsm.RESTART_CAP
    max_iter: int = 2500

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 1:
                raise ConfigError(f"reasoner.{f.name} must be positive")
        if self.walk_min > self.walk_max:
            raise ConfigError("reasoner.walk_min exceeds walk_max")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown reasoner keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Soldier:
    kind: str = "idle"
    auto: ScenarioAutomaton | None = None
    sid: int | None = None
    target: Coord | None = None
    goals: frozenset = frozenset()
    orient: int | None = None
    path: list[Action] = field(default_factory=list)
    issued: Action = A.SKIP
    stuck: int = 0
    wandering: bool = False
    rejected: int = 0

    def reset_route(self) -> None:
        self.target, self.goals, self.orient, self.path, self.stuck = None, frozenset(), None, [], 0


class DeSouchesTeam:
    engine = "desouches"

    def __init__(self, name: str, agent_ids, rules: WorldParams, cfg: ScenarioConfig | None = None,
                 seed: int = 0, verbosity: int = 0):
        self.name = name
        self.rules = rules
        self.cfg = cfg or ScenarioConfig()
        self.core = TeamCore(name, list(agent_ids), random.Random(f"{seed}:{name}"), verbosity)
        self.general = GeneralState.for_agents(self.core.agent_ids)
        self.soldiers = {a: Soldier() for a in self.core.agent_ids}
        self.outbox: list[Report] = []
        self.now = 0

    @property
    def agent_ids(self) -> list[int]:
        return self.core.agent_ids

    @property
    def registry(self):
        return self.core.registry

    def group_id(self, aid: int) -> int:
        return self.core.group_id(aid)

    def drain_events(self) -> list[dict]:
        for ev in self.general.log:
            self.core.events.append(dict(ev, team=self.name))
        self.general.log.clear()
        return self.core.drain_events()

    def _event(self, **kw) -> None:
        self.core.events.append(dict(kw, team=self.name))

    # -- the step ------------------------------------------------------------------

    def decide(self, percepts: dict[int, Percept]) -> dict[int, Action]:
        views = self.core.observe(percepts)
        now = self.now = next(iter(views.values())).percept.step
        tasks = next(iter(views.values())).percept.tasks
        for aid, v in views.items():
            self._absorb_result(self.soldiers[aid], v)
        reports, self.outbox = self.outbox, []
        self.general, orders = general_dispatch(self.general, self.core.registry, tasks, reports, now)
        for aid, sol in self.soldiers.items():
            if sol.kind == BLOCKS and self.general.assignment.get(aid) != sol.sid:
                self._assign(aid, "idle", None)
        for aid, order in sorted(orders.items()):
            self._assign(aid, order.kind, order.scenario)
        for sc in self.general.scenarios.values():
            for aid in sc.members:
                p = views[aid].percept
                if p.last_action.kind == "connect" and p.last_result == A.SUCCESS:
                    if aid == sc.commander:
                        sc.connected.add(p.last_action.partner)
                    else:
                        sc.connected.add(aid)

        res_maps = self.core.reservation_maps(views, now)
        order = sorted(views, key=lambda a: (self.soldiers[a].kind != BLOCKS, a))
        actions = {}
        for aid in order:
            v = views[aid]
            sol = self.soldiers[aid]
            act = self._choose(aid, v, sol, now)
            res = res_maps[v.group.group_id]
            if self.core.propose(res, v, act):
                sol.rejected = 0
            else:
                # replan next step; after repeated rejections step aside
                sol.path = []
                sol.rejected += 1
                act = self._sidestep(v, res) if sol.rejected >= SIDESTEP_AFTER else A.SKIP
                if act.kind == "skip":
                    self.core.propose(res, v, act)
            sol.issued = act
            actions[aid] = act
        self.core.flush_reservation_log(res_maps.values())
        return actions

    def _sidestep(self, v: AgentView, res) -> Action:
        dirs = list(DIR_ORDER)
        self.core.rng.shuffle(dirs)
        for d in dirs:
            act = A.move(d)
            if self.core.propose(res, v, act):
                return act
        return A.SKIP

    def _assign(self, aid: int, kind: str, sid: int | None) -> None:
        sol = self.soldiers[aid]
        sol.kind, sol.sid, sol.wandering = kind, sid, False
        sol.reset_route()
        sol.auto = None
        if kind == BLOCKS:
            sc = self.general.scenarios[sid]
            role = sc.members[aid]
            sol.auto = ScenarioAutomaton(role.role, role.index, task=sc.task,
                                         block_type=role.block_type, goal_offset=role.goal_offset,
                                         connect_dir=role.connect_dir,
                                         retry_cap=self.cfg.retry_cap, restart_cap=self.cfg.restart_cap)
        self._event(type="scenario", event="order", step=self.now, agent=aid, kind=kind, scenario=sid)

    def _absorb_result(self, sol: Soldier, v: AgentView) -> None:
        """Advance the cached route by the action that was actually executed."""
        p = v.percept
        if sol.issued.kind in ("move", "rotate") and sol.path and p.last_action == sol.issued:
            if p.last_result == A.SUCCESS and sol.path[0] == sol.issued:
                sol.path.pop(0)
                sol.stuck = 0
            elif A.is_failure(p.last_result):
                sol.path = []
                sol.stuck += 1

    # -- routing ------------------------------------------------------------------------

    def _route(self, v: AgentView, sol: Soldier, goals, orient: int | None = None) -> Action | None:
        """Next step along a cached path to ``goals``; None when unreachable."""
        goals = frozenset(goals)
        if goals != sol.goals or orient != sol.orient or not sol.path:
            res = a_star(v.group, v.pos, goals, v.body, self.cfg.max_iter, orient_goal=orient)
            sol.goals, sol.orient = goals, orient
            if res.found:
                sol.path = list(res.actions)
            elif res.partial:
                sol.path = list(res.partial)
            else:
                sol.path = []
                return None
            if not sol.path:
                return None
        return sol.path[0]

    def _report(self, aid: int, kind: str, sid: int | None = None) -> None:
        self.outbox.append(Report(aid, kind, sid))

    def _drop_cargo(self, v: AgentView) -> Action | None:
        if not v.blocks:
            return None
        dirs = [v.anchor_dir] if v.anchor_dir else []
        dirs += [d for d in DIR_ORDER if DIRS[d] in v.blocks and d not in dirs]
        return A.detach(dirs[0]) if dirs else None

    def _choose(self, aid: int, v: AgentView, sol: Soldier, now: int) -> Action:
        if sol.kind == BLOCKS:
            return self._blocks(aid, v, sol, now)
        drop = self._drop_cargo(v)
        last = v.percept
        if drop is not None and not (last.last_action == drop and A.is_failure(last.last_result)):
            return drop
        if sol.kind == SEARCH_DESTROY:
            return self._search_destroy(aid, v, sol)
        return self._walk(aid, v, sol)

    def _walk(self, aid: int, v: AgentView, sol: Soldier, report: bool = True) -> Action:
        for _ in range(2):
            if sol.target is None or sol.stuck >= PATIENCE:
                if sol.target is not None and report:
                    self._report(aid, "failure")
                sol.reset_route()
                sol.target = walk_sync_goal(v.group, v.pos, self.core.rng,
                                            self.cfg.walk_min, self.cfg.walk_max)
            if v.pos == sol.target:
                if report:
                    self._report(aid, "success")
                sol.reset_route()
                continue
            act = self._route(v, sol, {sol.target})
            if act is not None:
                return act
            if report:
                self._report(aid, "failure")
            sol.reset_route()
        return A.SKIP

    def _search_destroy(self, aid: int, v: AgentView, sol: Soldier) -> Action:
        gm = v.group
        if sol.wandering:
            if sol.target is not None and v.pos != sol.target and sol.stuck < PATIENCE:
                return self._walk(aid, v, sol, report=False)
            sol.wandering = False
            sol.reset_route()
        if sol.target is not None and gm.knowledge.get(sol.target) is not None \
                and gm.knowledge[sol.target].terrain == "obstacle" and sol.stuck < PATIENCE:
            target = sol.target
        else:
            if sol.target is not None and sol.goals:
                self._report(aid, "success" if sol.stuck < PATIENCE else "failure")
            sol.reset_route()
            target = search_destroy_goal(gm, v.pos, v.energy, self.rules.clear_cost)
            if target is None:
                # nothing to destroy: report and wander until the walk ends
                self._report(aid, "failure")
                sol.wandering = True
                return self._walk(aid, v, sol, report=False)
            sol.target = target
        if manhattan(target, v.pos) == 1:
            if v.energy < self.rules.clear_cost:
                return A.SKIP
            return A.clear(sub(target, v.pos))
        stands = {add(target, DIRS[d]) for d in DIR_ORDER}
        stands = {c for c in stands if not gm.blocked_for_planning(c)}
        act = self._route(v, sol, stands) if stands else None
        if act is None:
            sol.stuck = PATIENCE
            return A.SKIP
        return act

    # -- blocks scenario ---------------------------------------------------------------------

    def _blocks(self, aid: int, v: AgentView, sol: Soldier, now: int) -> Action:
        sc = self.general.scenarios.get(sol.sid)
        if sc is None:
            return A.SKIP
        for _ in range(MAX_TRANSITIONS):
            auto = sol.auto
            if auto.finished:
                self._report(aid, "success" if auto.state == fsm.DONE else "failure", sol.sid)
                self._assign(aid, "idle", None)
                return A.SKIP
            if auto.state in (fsm.GO_TO_GOAL, fsm.ROTATE_BLOCK, fsm.CONNECT, fsm.SUBMIT) \
                    and not v.blocks and not auto.detour:
                event, act = fsm.BLOCK_LOST, None
            else:
                event, act = self._pursue(aid, v, sol, sc, auto.goal)
            if act is not None:
                return act
            before = auto.state
            sol.auto, _ = step_automaton(auto, event)
            sol.reset_route()
            self._event(type="scenario", event="transition", step=now, agent=aid, scenario=sc.sid,
                        outcome=event, source=before, target=sol.auto.state,
                        detour=sol.auto.detour)
        return A.SKIP

    def _carried_ok(self, v: AgentView, btype: str) -> bool:
        return len(v.blocks) == 1 and next(iter(v.blocks.values())) == btype and not v.connected

    def _turns_needed(self, v: AgentView, want: Coord) -> int | None:
        if len(v.blocks) != 1:
            return None
        have = next(iter(v.blocks))
        for r in range(4):
            if rotate(have, r) == want:
                return r
        return None

    def _turn_dir(self, v: AgentView, r: int, failed_dir: str | None) -> str:
        """Rotation direction for ``r`` clockwise quarter turns: the shorter way
        unless its first sweep looks blocked or it just failed."""
        have = next(iter(v.blocks))
        clear = {d: not v.group.blocked_for_planning(add(v.pos, rotate(have, q)), v.percept.step)
                 for d, q in (("cw", 1), ("ccw", 3))}
        prefer = ["ccw", "cw"] if r == 3 else ["cw", "ccw"]
        if failed_dir in prefer:
            prefer.remove(failed_dir)
            prefer.append(failed_dir)
        return next((d for d in prefer if clear[d]), prefer[0])

    def _pursue(self, aid: int, v: AgentView, sol: Soldier, sc: Scenario, goal: str):
        """Returns ``(event, None)`` when the goal resolved, else ``(None, action)``."""
        auto = sol.auto
        role = sc.members[aid]
        gm = v.group
        p = v.percept
        if goal == fsm.RANDOM_WALK:
            if sol.target is None:
                sol.target = walk_sync_goal(gm, v.pos, self.core.rng, self.cfg.walk_min, self.cfg.walk_max)
            if v.pos == sol.target:
                return fsm.SUCCEEDED, None
            act = self._route(v, sol, {sol.target})
            if act is None or sol.stuck >= PATIENCE:
                return fsm.GOAL_FAILED, None
            return None, act

        if goal == fsm.GO_TO_DISPENSER:
            if self._carried_ok(v, auto.block_type):
                return fsm.SUCCEEDED, None
            if v.blocks:
                drop = self._drop_cargo(v)
                return (None, drop) if drop else (fsm.GOAL_FAILED, None)
            disp = [c for c, t in gm.dispensers().items() if t == auto.block_type]
            if not disp:
                return fsm.GOAL_FAILED, None
            if any(manhattan(c, v.pos) == 1 for c in disp):
                return fsm.SUCCEEDED, None
            stands = {add(c, DIRS[d]) for c in disp for d in DIR_ORDER}
            stands = {c for c in stands if c not in gm.dispensers() and not gm.blocked_for_planning(c)}
            near = sorted(stands, key=lambda c: (manhattan(c, v.pos), c))[:32]
            act = self._route(v, sol, near) if near else None
            if act is None or sol.stuck >= PATIENCE:
                return fsm.GOAL_FAILED, None
            return None, act

        if goal == fsm.GET_BLOCK:
            if self._carried_ok(v, auto.block_type):
                return fsm.SUCCEEDED, None
            if v.blocks:
                return fsm.GOAL_FAILED, None
            dirs = [d for d in DIR_ORDER
                    if gm.dispensers().get(add(v.pos, DIRS[d])) == auto.block_type]
            if not dirs:
                return fsm.GOAL_FAILED, None
            d = dirs[0]
            if p.last_action.kind in ("attach", "request") and A.is_failure(p.last_result):
                sol.stuck += 1
                if sol.stuck >= PATIENCE:
                    return fsm.GOAL_FAILED, None
            things = {t.kind for t in p.kinds_at(DIRS[d])}
            if "block" in things:
                return None, A.attach(d)
            if things & {"friend", "foe"}:
                return None, A.SKIP
            return None, A.request(d)

        if goal == fsm.GO_TO_GOAL:
            target = add(sc.goal, role.goal_offset)
            r = self._turns_needed(v, role.block_rel)
            if r is None:
                return fsm.BLOCK_LOST, None
            if v.pos == target:
                return fsm.SUCCEEDED, None
            act = self._route(v, sol, {target}, orient=r)
            if act is None:
                sol.stuck += 1
                if sol.stuck >= PATIENCE:
                    return fsm.GOAL_FAILED, None
                return None, A.SKIP
            return None, act

        if goal == fsm.ROTATE_BLOCK:
            r = self._turns_needed(v, role.block_rel)
            if r is None:
                return fsm.BLOCK_LOST, None
            if r == 0:
                return fsm.SUCCEEDED, None
            failed = p.last_action.kind == "rotate" and A.is_failure(p.last_result)
            if failed:
                sol.stuck += 1
                if sol.stuck >= PATIENCE:
                    return fsm.GOAL_FAILED, None
            return None, A.rotate(self._turn_dir(v, r, p.last_action.dir if failed else None))

        if goal == fsm.CONNECT:
            return self._connect(aid, v, sol, sc, role)

        if goal == fsm.DETACH:
            if not v.blocks or (p.last_action.kind == "detach" and p.last_result == A.SUCCESS):
                return fsm.SUCCEEDED, None
            if p.last_action.kind == "detach" and A.is_failure(p.last_result):
                sol.stuck += 1
                if sol.stuck >= PATIENCE:
                    return fsm.GOAL_FAILED, None
            d = v.anchor_dir or role.connect_dir
            return None, A.detach(d)

        if goal == fsm.SUBMIT:
            if p.last_action.kind == "submit" and p.last_result == A.SUCCESS:
                return fsm.SUCCEEDED, None
            if v.connected:
                return None, A.SKIP
            task = next((t for t in p.tasks if t.name == sc.task), None)
            if task is None or v.blocks != task.shape.as_dict():
                return fsm.GOAL_FAILED, None
            return None, A.submit(sc.task)
        raise ValueError(f"unknown goal {goal}")

    def _connect(self, aid: int, v: AgentView, sol: Soldier, sc: Scenario, role):
        p = v.percept
        if p.last_action.kind == "connect" and p.last_result == A.failed("target"):
            sol.stuck += 1
            if sol.stuck >= PATIENCE:
                return fsm.GOAL_FAILED, None
        if role.role == "lieutenant":
            if aid in sc.connected:
                return fsm.SUCCEEDED, None
            if v.pos != add(sc.goal, role.goal_offset):
                return fsm.GOAL_FAILED, None
            cid = sc.commander
            boss = self.soldiers[cid]
            ahead = [a for a in sc.lieutenants() if sc.members[a].index < role.index]
            ready = (boss.auto is not None and boss.auto.state == fsm.CONNECT
                     and self.core.registry.group_of(cid).members.get(cid) == sc.goal
                     and all(a in sc.connected for a in ahead))
            if not ready:
                return None, A.SKIP
            return None, A.connect(cid, role.block_rel, sub(role.connect_to, role.goal_offset))
        pending = [a for a in sc.lieutenants() if a not in sc.connected]
        if not pending:
            return fsm.SUCCEEDED, None
        if v.pos != sc.goal:
            return fsm.GOAL_FAILED, None
        nxt = pending[0]
        mate = self.soldiers[nxt]
        mrole = sc.members[nxt]
        gm = self.core.registry.group_of(aid)
        if (mate.auto is not None and mate.auto.state == fsm.CONNECT
                and gm.members.get(nxt) == add(sc.goal, mrole.goal_offset)):
            return None, A.connect(nxt, mrole.connect_to, mrole.block_offset)
        return None, A.SKIP
