"""Team-side plumbing shared by the reasoning engines.

Each step a team turns its agents' percepts into group-frame views: member
positions are advanced from action feedback (including drags by connected
teammates), percepts are written into the group maps and mutual sightings
merge groups. Engines then pick actions and pass them through the group's
reservation map.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable

from . import actions as A
from .actions import Action
from .beliefs import GroupMap, integrate_percept, track_own_action
from .geometry import DIRS, Coord, add, rotate_dir
from .reservation import Decision, ReservationMap, register_standing, reserve_action
from .sync import SyncRegistry, sync_step
from .world import Percept

FRESH_GROUP_BASE = 1_000_000


@dataclass
class AgentView:
    """What the team knows about one of its agents this step."""

    id: int
    group: GroupMap
    pos: Coord
    percept: Percept
    blocks: dict[Coord, str]
    partners: list[int]
    anchor_dir: str | None = None

    @property
    def energy(self) -> int:
        return self.percept.energy

    @property
    def body(self) -> list[Coord]:
        """Agent cell first, then every attached offset (blocks and teammates)."""
        return [(0, 0)] + sorted(self.percept.attached)

    @property
    def cells(self) -> list[Coord]:
        return [add(self.pos, o) for o in self.body]

    @property
    def connected(self) -> bool:
        return bool(self.percept.attached_agents())


@dataclass
class TeamCore:
    name: str
    agent_ids: list[int]
    rng: random.Random
    verbosity: int = 0
    registry: SyncRegistry = field(init=False)
    events: list[dict] = field(default_factory=list)
    prev: dict[int, Percept] = field(default_factory=dict)
    prev_partners: dict[int, dict[int, Coord]] = field(default_factory=dict)
    anchor_dirs: dict[int, str] = field(default_factory=dict)
    full_sync_step: int | None = None
    _fresh: int = FRESH_GROUP_BASE

    def __post_init__(self) -> None:
        self.agent_ids = sorted(self.agent_ids)
        self.registry = SyncRegistry.for_agents(self.agent_ids)
        if len(self.agent_ids) == 1:
            self.full_sync_step = 0

    # -- belief update --------------------------------------------------------

    def observe(self, percepts: dict[int, Percept]) -> dict[int, AgentView]:
        mine = {aid: percepts[aid] for aid in self.agent_ids}
        step = next(iter(mine.values())).step if mine else 0
        if self.prev:
            self._track(mine)
        for aid, p in mine.items():
            integrate_percept(self.registry.group_of(aid), aid, p)
        self.registry, _, evs = sync_step(self.registry, mine)
        for ev in evs:
            ev["step"] = step
            ev["team"] = self.name
            self.events.append(ev)
        if self.full_sync_step is None and self.registry.fully_synced():
            self.full_sync_step = step
        self.prev = mine
        views = self._views(mine)
        self.prev_partners = {aid: {pid: self._partner_offset(views, aid, pid)
                                    for pid in v.partners} for aid, v in views.items()}
        return views

    def _partner_offset(self, views, aid, pid) -> Coord:
        a, b = views[aid].pos, views[pid].pos
        return (b[0] - a[0], b[1] - a[1])

    def _track(self, mine: dict[int, Percept]) -> None:
        drag: dict[int, Coord] = {}
        for aid, p in mine.items():
            act, res = p.last_action, p.last_result
            if act.kind == "move" and res == A.SUCCESS:
                d = DIRS[act.dir]
                for pid in self.prev_partners.get(aid, {}):
                    x, y = drag.get(pid, (0, 0))
                    drag[pid] = (x + d[0], y + d[1])
            self._track_anchor(aid, act, res, p)
        suspect = []
        for aid, p in mine.items():
            before = self.prev[aid]
            gm = self.registry.group_of(aid)
            track_own_action(gm, aid, p.last_action, p.last_result,
                             footprint=[(0, 0)] + list(before.attached),
                             extra_shift=drag.get(aid, (0, 0)))
            if aid in drag and sorted(before.attached_agents()) != sorted(p.attached_agents()):
                suspect.append(aid)
        for aid in suspect:
            self._eject(aid, mine[aid].step)

    def _track_anchor(self, aid: int, act: Action, res: str, p: Percept) -> None:
        if res == A.SUCCESS:
            if act.kind == "attach":
                self.anchor_dirs[aid] = act.dir
            elif act.kind == "rotate" and aid in self.anchor_dirs:
                self.anchor_dirs[aid] = rotate_dir(self.anchor_dirs[aid], 1 if act.dir == "cw" else -1)
            elif act.kind == "detach" and self.anchor_dirs.get(aid) == act.dir:
                del self.anchor_dirs[aid]
        d = self.anchor_dirs.get(aid)
        if d is not None and DIRS[d] not in p.attached_blocks():
            del self.anchor_dirs[aid]

    def _eject(self, aid: int, step: int) -> None:
        """Drop an agent whose position can no longer be trusted into a fresh group."""
        reg = self.registry
        old = reg.group_of(aid)
        if len(old.members) == 1:
            return
        del old.members[aid]
        gid = self._fresh
        self._fresh += 1
        gm = GroupMap(group_id=gid, members={aid: (0, 0)}, step=old.step)
        reg.groups[gid] = gm
        reg.agent_to_group[aid] = gid
        self.full_sync_step = None if len(reg.groups) > 1 else self.full_sync_step
        self.events.append({"type": "desync", "step": step, "team": self.name,
                            "agent": aid, "group": gid})

    def _views(self, mine: dict[int, Percept]) -> dict[int, AgentView]:
        reg = self.registry
        views = {}
        for aid, p in mine.items():
            gm = reg.group_of(aid)
            pos = gm.members[aid]
            by_pos = {c: m for m, c in gm.members.items()}
            partners = []
            for o in p.attached_agents():
                pid = by_pos.get(add(pos, o))
                if pid is not None:
                    partners.append(pid)
            views[aid] = AgentView(aid, gm, pos, p, p.attached_blocks(), sorted(partners),
                                   self.anchor_dirs.get(aid))
        return views

    # -- reservations ---------------------------------------------------------

    def reservation_maps(self, views: dict[int, AgentView], step: int) -> dict[int, ReservationMap]:
        """One reservation map per group, pre-claimed with every member's current cells."""
        maps: dict[int, ReservationMap] = {}
        done: set[int] = set()
        for aid in sorted(views):
            if aid in done:
                continue
            v = views[aid]
            res = maps.setdefault(v.group.group_id, ReservationMap(step=step))
            comp = component_of(views, aid)
            done.update(comp)
            cells = [c for m in comp for c in views[m].cells]
            register_standing(res, comp, cells)
        return maps

    def propose(self, res: ReservationMap, view: AgentView, action: Action) -> Decision:
        return reserve_action(res, view.id, action, view.cells, view.pos)

    def flush_reservation_log(self, maps: Iterable[ReservationMap]) -> None:
        for res in maps:
            if self.verbosity >= 1:
                for rec in res.log:
                    self.events.append(dict(rec, team=self.name))
            res.log.clear()

    def drain_events(self) -> list[dict]:
        out, self.events = self.events, []
        return out

    def group_id(self, aid: int) -> int:
        return self.registry.agent_to_group[aid]


def component_of(views: dict[int, AgentView], aid: int) -> list[int]:
    """Team agents sharing ``aid``'s attached structure."""
    seen = {aid}
    stack = [aid]
    while stack:
        for pid in views[stack.pop()].partners:
            if pid not in seen and pid in views:
                seen.add(pid)
                stack.append(pid)
    return sorted(seen)
