"""The general: assigns scenarios to soldiers and picks the mastergroup."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from ..beliefs import GroupMap
from ..geometry import Coord, add, manhattan
from ..sync import SyncRegistry
from .placements import PlacementError, RoleAssignment, plan_block_placements

IDLE = "idle"
WALK_SYNC = "walkSync"
SEARCH_DESTROY = "searchDestroy"
BLOCKS = "blocks"


@dataclass(frozen=True)
class Report:
    agent: int
    kind: str  # "success" | "failure" | "needJob"
    scenario: int | None = None


@dataclass
class Scenario:
    sid: int
    task: str
    deadline: int
    group: int
    goal: Coord
    members: dict[int, RoleAssignment]
    connected: set[int] = field(default_factory=set)

    @property
    def commander(self) -> int:
        return next(a for a, r in self.members.items() if r.role == "commander")

    def lieutenants(self) -> list[int]:
        return sorted((a for a, r in self.members.items() if r.role == "lieutenant"),
                      key=lambda a: self.members[a].index)


@dataclass(frozen=True)
class Order:
    kind: str
    scenario: int | None = None


@dataclass
class GeneralState:
    status: dict[int, str]
    assignment: dict[int, int] = field(default_factory=dict)
    master: int | None = None
    pending: deque = field(default_factory=deque)
    scenarios: dict[int, Scenario] = field(default_factory=dict)
    next_sid: int = 1
    log: list[dict] = field(default_factory=list)

    @classmethod
    def for_agents(cls, agent_ids) -> "GeneralState":
        return cls(status={a: IDLE for a in sorted(agent_ids)})


def _terrain_ok(gm: GroupMap, c: Coord) -> bool:
    if gm.outside(c):
        return False
    cell = gm.knowledge.get(c)
    return cell is None or cell.terrain != "obstacle"


def find_stance(gm: GroupMap, shape, near: Coord) -> tuple[Coord, list[RoleAssignment]] | None:
    """Nearest known goal cell where the whole construction fits the map."""
    for g in sorted(gm.goals(), key=lambda c: (manhattan(c, near), c)):
        try:
            roles = plan_block_placements(shape, free=lambda o, g=g: _terrain_ok(gm, add(g, o)))
        except PlacementError:
            continue
        return g, roles
    return None


def _disband(gs: GeneralState, sid: int, now: int, why: str) -> None:
    sc = gs.scenarios.pop(sid)
    for a in sc.members:
        if gs.assignment.get(a) == sid:
            del gs.assignment[a]
            gs.status[a] = IDLE
    gs.log.append({"type": "scenario", "event": "disband", "step": now, "scenario": sid,
                   "task": sc.task, "reason": why})


def general_dispatch(
    gs: GeneralState,
    reg: SyncRegistry,
    tasks,
    reports=(),
    now: int = 0,
) -> tuple[GeneralState, dict[int, Order]]:
    """Drain soldier reports, retire dead scenarios, start new ones and hand
    every unassigned soldier a traversal scenario."""
    orders: dict[int, Order] = {}
    gs.pending.extend(reports)
    while gs.pending:
        rep = gs.pending.popleft()
        sid = gs.assignment.get(rep.agent)
        if sid is None or sid != rep.scenario:
            if rep.kind == "needJob":
                gs.status[rep.agent] = IDLE
            continue
        sc = gs.scenarios[sid]
        if rep.kind == "failure":
            _disband(gs, sid, now, "member failed")
        elif rep.kind == "success":
            del gs.assignment[rep.agent]
            gs.status[rep.agent] = IDLE
            if rep.agent == sc.commander:
                gs.log.append({"type": "scenario", "event": "success", "step": now,
                               "scenario": sid, "task": sc.task})
                _disband(gs, sid, now, "completed")

    active = {t.name: t for t in tasks}
    for sid in sorted(gs.scenarios):
        sc = gs.scenarios[sid]
        if sc.task not in active or now > sc.deadline:
            _disband(gs, sid, now, "deadline")

    busy_tasks = {sc.task for sc in gs.scenarios.values()}
    for task in sorted(active.values(), key=lambda t: (-t.reward, t.name)):
        if task.name in busy_tasks:
            continue
        started = _try_start(gs, reg, task, now)
        if started is not None:
            busy_tasks.add(task.name)
            for a in started.members:
                orders[a] = Order(BLOCKS, started.sid)

    traversal = SEARCH_DESTROY if reg.fully_synced() else WALK_SYNC
    for a in sorted(gs.status):
        st = gs.status[a]
        if st == BLOCKS:
            continue
        if st != traversal:
            gs.status[a] = traversal
            orders[a] = Order(traversal)
    return gs, orders


def _try_start(gs: GeneralState, reg: SyncRegistry, task, now: int) -> Scenario | None:
    k = len(task.shape)
    types = {t for _, t in task.shape.entries}
    if reg.master_group_id is not None:
        candidates = [reg.master_group_id]
    else:
        candidates = sorted(reg.groups)
    for gid in candidates:
        gm = reg.groups[gid]
        free = sorted(a for a in gm.members if gs.status.get(a) != BLOCKS)
        if len(free) < k:
            continue
        if not types <= set(gm.dispensers().values()) or not gm.goals():
            continue
        cx = sum(gm.members[a][0] for a in free) // len(free)
        cy = sum(gm.members[a][1] for a in free) // len(free)
        found = find_stance(gm, task.shape, (cx, cy))
        if found is None:
            continue
        goal, roles = found
        if reg.master_group_id is None:
            reg.set_master(gid)
            gs.master = gid
            gs.log.append({"type": "scenario", "event": "mastergroup", "step": now, "group": gid})
        chosen = sorted(free, key=lambda a: (manhattan(gm.members[a], goal), a))[:k]
        sc = Scenario(gs.next_sid, task.name, task.deadline, gid, goal,
                      {a: r for a, r in zip(chosen, roles)})
        gs.next_sid += 1
        gs.scenarios[sc.sid] = sc
        for a in chosen:
            gs.status[a] = BLOCKS
            gs.assignment[a] = sc.sid
        gs.log.append({"type": "scenario", "event": "assigned", "step": now, "scenario": sc.sid,
                       "task": task.name, "group": gid, "goal": list(goal),
                       "members": {str(a): r.role for a, r in sc.members.items()}})
        return sc
    return None
