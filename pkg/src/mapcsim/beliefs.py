"""Shared group belief maps in group-frame coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .actions import Action
from .geometry import DIRS, Coord, add, diamond, neighbors4, sub
from .world import Percept

STALE_TTL = 20


class Cell(NamedTuple):
    terrain: str  # free | obstacle | dispenser | goal
    detail: str | None  # dispenser block type
    occupant: str | None  # None | block | friend | foe
    occ_detail: str | None  # block type
    seen: int

    @property
    def state(self) -> str:
        if self.occupant == "block":
            return "block"
        return self.terrain


@dataclass
class GroupMap:
    group_id: int
    knowledge: dict[Coord, Cell] = field(default_factory=dict)
    members: dict[int, Coord] = field(default_factory=dict)
    limits: dict[str, int] = field(default_factory=dict)
    markers: dict[Coord, int] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def founding(cls, agent_id: int) -> "GroupMap":
        return cls(group_id=agent_id, members={agent_id: (0, 0)})

    def state(self, c: Coord) -> str:
        if self.outside(c):
            return "outside"
        cell = self.knowledge.get(c)
        return "unknown" if cell is None else cell.state

    def outside(self, c: Coord) -> bool:
        lim = self.limits
        if not lim:
            return False
        x, y = c
        return (("e" in lim and x >= lim["e"]) or ("w" in lim and x <= lim["w"])
                or ("s" in lim and y >= lim["s"]) or ("n" in lim and y <= lim["n"]))

    def cells_of(self, terrain: str) -> list[Coord]:
        return sorted(c for c, cell in self.knowledge.items() if cell.terrain == terrain)

    def dispensers(self) -> dict[Coord, str]:
        return {c: cell.detail for c, cell in sorted(self.knowledge.items()) if cell.terrain == "dispenser"}

    def goals(self) -> list[Coord]:
        return self.cells_of("goal")

    def blocked_for_planning(self, c: Coord, now: int | None = None) -> bool:
        """Obstacles, border, and fresh sightings of blocks or entities block a path."""
        if self.outside(c):
            return True
        cell = self.knowledge.get(c)
        if cell is None:
            return False
        if cell.terrain == "obstacle":
            return True
        if cell.occupant is not None:
            now = self.step if now is None else now
            return now - cell.seen <= STALE_TTL
        return False

    def set_limit(self, d: str, bound: int) -> None:
        self.limits[d] = bound
        for c in [c for c in self.knowledge if self.outside(c)]:
            del self.knowledge[c]

    def dump(self) -> str:
        """Text grid of the known area: ? unknown, . free, # obstacle, d dispenser, g goal."""
        if not self.knowledge:
            return ""
        xs = [c[0] for c in self.knowledge]
        ys = [c[1] for c in self.knowledge]
        chars = {"free": ".", "obstacle": "#", "dispenser": "d", "goal": "g"}
        rows = []
        for y in range(min(ys), max(ys) + 1):
            row = []
            for x in range(min(xs), max(xs) + 1):
                cell = self.knowledge.get((x, y))
                row.append("?" if cell is None else chars[cell.terrain])
            rows.append("".join(row))
        return "\n".join(rows)


def integrate_percept(gm: GroupMap, agent_id: int, percept: Percept) -> GroupMap:
    """Write everything in the agent's view into the map at the current step."""
    pos = gm.members[agent_id]
    step = percept.step
    gm.step = max(gm.step, step)
    by_rel: dict[Coord, list] = {}
    for t in percept.things:
        by_rel.setdefault(t.rel, []).append(t)
    know = gm.knowledge
    px, py = pos
    for o in diamond(percept.vision):
        c = (px + o[0], py + o[1])
        if gm.limits and gm.outside(c):
            continue
        terrain, detail, occ, occ_detail = "free", None, None, None
        gm.markers.pop(c, None)
        for t in by_rel.get(o, ()):
            k = t.kind
            if k == "obstacle":
                terrain = "obstacle"
            elif k == "dispenser":
                terrain, detail = "dispenser", t.detail
            elif k == "goal":
                terrain = "goal"
            elif k == "block":
                occ, occ_detail = "block", t.detail
            elif k in ("friend", "foe"):
                occ = k
            elif k == "marker":
                gm.markers[c] = step + int(t.detail)
        know[c] = Cell(terrain, detail, occ, occ_detail, step)
    return gm


def track_own_action(
    gm: GroupMap,
    agent_id: int,
    action: Action,
    result: str,
    footprint: list[Coord] | None = None,
    extra_shift: Coord = (0, 0),
) -> GroupMap:
    """Update the member position from the simulator's feedback.

    ``extra_shift`` carries displacement caused by connected teammates
    dragging this agent. ``footprint`` (offsets before the action) lets a
    border hit be turned into a map limit.
    """
    pos = gm.members[agent_id]
    if action.kind == "move" and result == "success":
        pos = add(pos, DIRS[action.dir])
    elif action.kind == "move" and result == "failed_out_of_bounds":
        cells = [add(pos, o) for o in (footprint or [(0, 0)])]
        d = action.dir
        if d == "e":
            gm.set_limit("e", max(c[0] for c in cells) + 1)
        elif d == "w":
            gm.set_limit("w", min(c[0] for c in cells) - 1)
        elif d == "s":
            gm.set_limit("s", max(c[1] for c in cells) + 1)
        elif d == "n":
            gm.set_limit("n", min(c[1] for c in cells) - 1)
    gm.members[agent_id] = add(pos, extra_shift)
    return gm


def merge_maps(a: GroupMap, b: GroupMap, shift: Coord) -> GroupMap:
    """Merge ``b`` into ``a``; ``shift`` maps b-frame coordinates to a-frame."""
    sx, sy = shift
    know = dict(a.knowledge)
    for (x, y), cell in b.knowledge.items():
        c = (x + sx, y + sy)
        mine = know.get(c)
        if mine is None or cell.seen > mine.seen:
            know[c] = cell
    members = dict(a.members)
    for aid, p in b.members.items():
        members[aid] = (p[0] + sx, p[1] + sy)
    limits = dict(a.limits)
    for d, v in b.limits.items():
        v = v + (sx if d in ("e", "w") else sy)
        if d in limits:
            v = min(v, limits[d]) if d in ("e", "s") else max(v, limits[d])
        limits[d] = v
    markers = dict(a.markers)
    for (x, y), t in b.markers.items():
        c = (x + sx, y + sy)
        markers[c] = min(t, markers.get(c, t))
    out = GroupMap(a.group_id, know, members, {}, markers, max(a.step, b.step))
    for d, v in limits.items():
        out.set_limit(d, v)
    return out


def frontier_cells(gm: GroupMap) -> list[Coord]:
    out = []
    know = gm.knowledge
    for c, cell in know.items():
        if cell.terrain == "obstacle":
            continue
        for n in neighbors4(c):
            if n not in know and not gm.outside(n):
                out.append(c)
                break
    return sorted(out)


def frontier_targets(gm: GroupMap, k: int) -> list[Coord]:
    """``k`` exploration targets: one frontier cell per angular sector around
    the group centroid, or the longest-unseen cells once nothing is unknown."""
    if k < 1:
        raise ValueError("k must be >= 1")
    frontier = frontier_cells(gm)
    if frontier:
        if gm.members:
            cx = sum(p[0] for p in gm.members.values()) / len(gm.members)
            cy = sum(p[1] for p in gm.members.values()) / len(gm.members)
        else:
            cx = cy = 0.0
        swept = sorted(frontier, key=lambda c: (math.atan2(c[1] - cy, c[0] - cx), c))
        k = min(k, len(swept))
        targets = []
        for i in range(k):
            chunk = swept[i * len(swept) // k:(i + 1) * len(swept) // k]
            mx = sum(c[0] for c in chunk) / len(chunk)
            my = sum(c[1] for c in chunk) / len(chunk)
            targets.append(min(chunk, key=lambda c: ((c[0] - mx) ** 2 + (c[1] - my) ** 2, c)))
        return targets
    stale = [(cell.seen, c) for c, cell in gm.knowledge.items()
             if cell.terrain != "obstacle" and cell.seen < gm.step]
    stale.sort()
    return [c for _, c in stale[:k]]


def shift_between(a: GroupMap, agent_a: int, b: GroupMap, agent_b: int, d: Coord) -> Coord:
    """Shift mapping b-frame to a-frame given that ``agent_a`` sees ``agent_b`` at ``d``."""
    return sub(add(a.members[agent_a], d), b.members[agent_b])
