"""Iteration-bounded A* over belief maps for agents carrying blocks.

Search states are ``(x, y, r)``: the agent cell plus the number of clockwise
quarter turns applied to the footprint since the start. Moving through
unknown cells costs 2, through known free cells 1; rotations cost 1.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

from . import actions as A
from .actions import Action
from .beliefs import GroupMap
from .geometry import DIRS, Coord, manhattan, rotate

DEFAULT_MAX_ITER = 2500
_MOVES = tuple((d, dx, dy, A.move(d)) for d, (dx, dy) in DIRS.items())
_CW = A.rotate("cw")
_CCW = A.rotate("ccw")

State = tuple[int, int, int]


@dataclass
class PathResult:
    actions: list[Action] | None
    reason: str | None  # None on success, else "capExceeded" | "exhausted"
    iterations: int
    cost: int = 0
    end: State | None = None
    partial: list[Action] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.actions is not None

    def __len__(self) -> int:
        return len(self.actions) if self.actions is not None else 0


def is_rotation_symmetric(footprint: Iterable[Coord]) -> bool:
    cells = set(footprint)
    return {rotate(c, 1) for c in cells} == cells


def _passable_fn(gm: GroupMap, ignore: set[Coord]):
    cache: dict[Coord, bool] = {}
    blocked = gm.blocked_for_planning
    know = gm.knowledge

    def passable(c: Coord) -> bool:
        v = cache.get(c)
        if v is None:
            if c in ignore:
                cell = know.get(c)
                v = not gm.outside(c) and not (cell is not None and cell.terrain == "obstacle")
            else:
                v = not blocked(c)
            cache[c] = v
        return v

    return passable


def _orientations(footprint: Iterable[Coord]) -> list[tuple[Coord, ...]]:
    fp = tuple(sorted(set(footprint) | {(0, 0)}))
    return [tuple(rotate(o, r) for o in fp) for r in range(4)]


def _rebuild(parents: dict, state: State) -> list[Action]:
    out = []
    while True:
        prev = parents.get(state)
        if prev is None:
            break
        state, act = prev
        out.append(act)
    out.reverse()
    return out


def a_star(
    gm: GroupMap,
    start: Coord,
    goals: Iterable[Coord] | None,
    footprint: Iterable[Coord] = ((0, 0),),
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    start_orient: int = 0,
    goal_pred: Callable[[Coord, int], bool] | None = None,
    orient_goal: int | None = None,
    ignore: Iterable[Coord] | None = None,
    rotations: bool | None = None,
    counter: list[int] | None = None,
) -> PathResult:
    """Shortest move/rotate sequence bringing the agent cell into ``goals``.

    ``footprint`` holds the agent cell and attached offsets in orientation
    ``start_orient``. ``goal_pred(cell, r)`` further filters goal states and
    ``orient_goal`` demands a final turn count. ``ignore`` lists cells whose
    sightings are the agent's own body. ``counter[0]`` is incremented per
    expansion so callers can meter work.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    goal_set = set(goals) if goals is not None else None
    if goal_set is not None and not goal_set:
        return PathResult(None, "exhausted", 0)
    forms = _orientations(rotate(o, -start_orient) for o in footprint)
    ignore_set = set(ignore) if ignore is not None else {
        (start[0] + o[0], start[1] + o[1]) for o in forms[start_orient % 4]
    }
    passable = _passable_fn(gm, ignore_set)
    know = gm.knowledge
    if rotations is None:
        rotations = orient_goal is not None or not is_rotation_symmetric(forms[0])
    goal_list = sorted(goal_set) if goal_set is not None else None
    use_h = goal_list is not None and len(goal_list) <= 64

    def h(x: int, y: int) -> int:
        if not use_h:
            return 0
        return min(abs(x - gx) + abs(y - gy) for gx, gy in goal_list)

    fit_cache: dict[State, bool] = {}

    def fits(x: int, y: int, r: int) -> bool:
        key = (x, y, r)
        v = fit_cache.get(key)
        if v is None:
            v = True
            for ox, oy in forms[r]:
                if not passable((x + ox, y + oy)):
                    v = False
                    break
            fit_cache[key] = v
        return v

    def step_cost(x: int, y: int, r: int) -> int:
        for ox, oy in forms[r]:
            if (x + ox, y + oy) not in know:
                return 2
        return 1

    def is_goal(x: int, y: int, r: int) -> bool:
        if goal_set is not None and (x, y) not in goal_set:
            return False
        if orient_goal is not None and r != orient_goal % 4:
            return False
        return goal_pred is None or goal_pred((x, y), r)

    s0: State = (start[0], start[1], start_orient % 4)
    h0 = h(start[0], start[1])
    g_best: dict[State, int] = {s0: 0}
    parents: dict[State, tuple[State, Action]] = {}
    heap = [(h0, h0, s0)]
    closed: set[State] = set()
    iterations = 0
    best_partial = (h0, 0, s0)
    while heap:
        f, hv, s = heapq.heappop(heap)
        g = g_best[s]
        if f - hv != g or s in closed:
            continue
        closed.add(s)
        iterations += 1
        if counter is not None:
            counter[0] += 1
        x, y, r = s
        if is_goal(x, y, r):
            return PathResult(_rebuild(parents, s), None, iterations, g, s)
        if (hv, g) < best_partial[:2]:
            best_partial = (hv, g, s)
        succ = []
        for _, dx, dy, act in _MOVES:
            nx, ny = x + dx, y + dy
            if fits(nx, ny, r):
                succ.append(((nx, ny, r), step_cost(nx, ny, r), act))
        if rotations:
            for nr, act in (((r + 1) % 4, _CW), ((r - 1) % 4, _CCW)):
                if fits(x, y, nr):
                    succ.append(((x, y, nr), 1, act))
        for ns, c, act in succ:
            ng = g + c
            if ng < g_best.get(ns, 1 << 30):
                g_best[ns] = ng
                parents[ns] = (s, act)
                nh = h(ns[0], ns[1])
                heapq.heappush(heap, (ng + nh, nh, ns))
        if iterations >= max_iter:
            return PathResult(None, "capExceeded", iterations,
                              partial=_rebuild(parents, best_partial[2]), end=best_partial[2])
    return PathResult(None, "exhausted", iterations,
                      partial=_rebuild(parents, best_partial[2]), end=best_partial[2])


def escape_path(
    gm: GroupMap,
    start: Coord,
    footprint: Iterable[Coord],
    danger: set[Coord],
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    ignore: Iterable[Coord] | None = None,
) -> PathResult:
    """Fewest actions taking every footprint cell out of ``danger``."""
    forms = _orientations(footprint)
    ignore_set = set(ignore) if ignore is not None else {
        (start[0] + o[0], start[1] + o[1]) for o in forms[0]
    }
    passable = _passable_fn(gm, ignore_set)
    rotations = not is_rotation_symmetric(forms[0])

    def fits(x, y, r):
        return all(passable((x + ox, y + oy)) for ox, oy in forms[r])

    def safe(x, y, r):
        return all((x + ox, y + oy) not in danger for ox, oy in forms[r])

    s0 = (start[0], start[1], 0)
    parents: dict[State, tuple[State, Action]] = {}
    seen = {s0}
    q = deque([s0])
    iterations = 0
    while q:
        s = q.popleft()
        iterations += 1
        x, y, r = s
        if safe(x, y, r):
            acts = _rebuild(parents, s)
            return PathResult(acts, None, iterations, len(acts), s)
        nxt = [((x + dx, y + dy, r), act) for _, dx, dy, act in _MOVES]
        if rotations:
            nxt += [((x, y, (r + 1) % 4), A.rotate("cw")), ((x, y, (r - 1) % 4), A.rotate("ccw"))]
        for ns, act in nxt:
            if ns not in seen and fits(*ns):
                seen.add(ns)
                parents[ns] = (s, act)
                q.append(ns)
        if iterations >= max_iter:
            return PathResult(None, "capExceeded", iterations)
    return PathResult(None, "exhausted", iterations)


def bfs_distance(passable: Callable[[Coord], bool], start: Coord, goals: Iterable[Coord],
                 limit: int = 1 << 20) -> int | None:
    """Plain breadth-first shortest path length for a single-cell agent."""
    goal_set = set(goals)
    if start in goal_set:
        return 0
    seen = {start}
    q = deque([(start, 0)])
    while q:
        c, dist = q.popleft()
        if dist >= limit:
            break
        for dx, dy in DIRS.values():
            n = (c[0] + dx, c[1] + dy)
            if n in seen or not passable(n):
                continue
            if n in goal_set:
                return dist + 1
            seen.add(n)
            q.append((n, dist + 1))
    return None


def replay_path(gm: GroupMap, start: Coord, footprint: Iterable[Coord], path: list[Action],
                ignore: Iterable[Coord] | None = None) -> list[tuple[Coord, tuple[Coord, ...]]]:
    """Placements visited by ``path``; raises ValueError on an illegal step."""
    forms = _orientations(footprint)
    ignore_set = set(ignore) if ignore is not None else {(start[0] + o[0], start[1] + o[1]) for o in forms[0]}
    passable = _passable_fn(gm, ignore_set)
    x, y, r = start[0], start[1], 0
    out = [((x, y), tuple((x + ox, y + oy) for ox, oy in forms[r]))]
    for act in path:
        if act.kind == "move":
            dx, dy = DIRS[act.dir]
            x, y = x + dx, y + dy
        elif act.kind == "rotate":
            r = (r + (1 if act.dir == "cw" else -1)) % 4
        else:
            raise ValueError(f"unexpected action {act}")
        cells = tuple((x + ox, y + oy) for ox, oy in forms[r])
        if not all(passable(c) for c in cells):
            raise ValueError(f"illegal placement after {act}")
        out.append(((x, y), cells))
    return out


def manhattan_lower_bound(start: Coord, goals: Iterable[Coord]) -> int:
    return min(manhattan(start, g) for g in goals)
