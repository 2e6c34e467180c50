"""Task assembly over the connection candidates set (CCS).

1. every unconnected agent enters the CCS;
2. agents already carrying a task's exact shape with a path to a goal get a
   GoSubmit plan and leave the CCS;
3. the rest are ordered by how complete their structure is, weighted by
   task reward;
4. for each task, pair placements are generated: the keeper holds still and
   the joiner brings its structure alongside so the union is a connected,
   non-overlapping part of the task shape within the size limit;
5. candidates are scored ``reward - max(path lengths)``;
6. the best candidate whose two agents are both still free is taken, both
   leave the CCS, repeat.

Paths are only computed for candidates that could still win: the Manhattan
distance gives an upper bound on the score, and a candidate is accepted once
its real score beats every remaining bound.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .. import actions as A
from ..geometry import Coord, add, manhattan, neighbors4, rotate, sub
from ..pathfind import a_star
from ..shapes import match_rotation
from ..teamcore import AgentView
from .config import ReasonerConfig
from .options import nearest
from .plans import OptionPlan
from .watchdog import Watchdog


@dataclass(frozen=True)
class Placement:
    """Joiner placement in the keeper's frame (keeper at the origin)."""

    rotation: int  # shape quarter turns the union is part of
    joiner_cell: Coord
    joiner_turns: int
    keeper_block: Coord
    joiner_block: Coord
    placed: tuple[tuple[Coord, str], ...]  # joiner blocks after placement
    size: int


@dataclass
class Candidate:
    task: str
    reward: int
    keeper: int
    joiner: int
    anchor: Coord
    placement: Placement
    bound: int
    metric: int | None = None
    keeper_path: list = field(default_factory=list)
    joiner_path: list = field(default_factory=list)

    def tiebreak(self) -> tuple:
        p = self.placement
        return (p.size, self.task, self.keeper, self.joiner, self.anchor,
                p.rotation, p.joiner_cell, p.joiner_turns)

    @property
    def joiner_target(self) -> Coord:
        return add(self.anchor, self.placement.joiner_cell)

    def union(self, keeper_blocks: dict[Coord, str]) -> dict[Coord, str]:
        out = dict(keeper_blocks)
        out.update(self.placement.placed)
        return out


def _distinct_rotations(shape) -> list[tuple[int, dict[Coord, str]]]:
    seen, out = set(), []
    for q in range(4):
        d = shape.rotated(q).as_dict()
        key = frozenset(d.items())
        if key not in seen:
            seen.add(key)
            out.append((q, d))
    return out


def pair_placements(
    keeper_blocks: dict[Coord, str],
    joiner_blocks: dict[Coord, str],
    shape,
    max_size: int,
) -> list[Placement]:
    """Every way to add the joiner's structure to the keeper's within ``shape``.

    The size counts both agents plus all blocks.
    """
    if not keeper_blocks or not joiner_blocks:
        return []
    size = len(keeper_blocks) + len(joiner_blocks) + 2
    if size > max_size:
        return []
    out = []
    seen = set()
    for q, target in _distinct_rotations(shape):
        if any(target.get(o) != t for o, t in keeper_blocks.items()):
            continue
        rest = {o: t for o, t in target.items() if o not in keeper_blocks}
        if len(joiner_blocks) > len(rest):
            continue
        for r in range(4):
            turned = {rotate(o, r): t for o, t in joiner_blocks.items()}
            ref = min(turned)
            for cell in sorted(rest):
                shift = sub(cell, ref)
                placed = {add(o, shift): t for o, t in turned.items()}
                if any(rest.get(o) != t for o, t in placed.items()):
                    continue
                agent = shift  # the joiner sits at its own origin
                if agent == (0, 0) or agent in target:
                    continue
                link = None
                for kb in sorted(keeper_blocks):
                    for n in neighbors4(kb):
                        if n in placed:
                            link = (kb, n)
                            break
                    if link:
                        break
                if link is None:
                    continue
                key = (q, agent, r, tuple(sorted(placed.items())))
                if key in seen:
                    continue
                seen.add(key)
                out.append(Placement(q, agent, r, link[0], link[1],
                                     tuple(sorted(placed.items())), size))
    return out


def completeness(blocks: dict[Coord, str], tasks) -> float:
    best = 0.0
    for task in tasks:
        for _, target in _distinct_rotations(task.shape):
            if all(target.get(o) == t for o, t in blocks.items()):
                best = max(best, task.reward * len(blocks) / len(task.shape))
    return best


@dataclass
class AssemblyResult:
    submit: dict[int, OptionPlan] = field(default_factory=dict)
    connect: dict[int, OptionPlan] = field(default_factory=dict)
    candidates: list[Candidate] = field(default_factory=list)
    chosen: list[Candidate] = field(default_factory=list)
    complete: bool = True


def _placement_free(view_j: AgentView, anchor: Coord, p: Placement, keeper_cells: set[Coord]) -> bool:
    gm = view_j.group
    own = set(view_j.cells)
    cells = [add(anchor, p.joiner_cell)] + [add(anchor, o) for o, _ in p.placed]
    for c in cells:
        if c in keeper_cells:
            return False
        if c not in own and gm.blocked_for_planning(c):
            return False
    return True


def assemble_tasks(
    views: list[AgentView],
    tasks,
    cfg: ReasonerConfig,
    watchdog: Watchdog | None = None,
) -> AssemblyResult:
    """CCS assembly for one group. ``views`` are the group's agents."""
    out = AssemblyResult()
    wd = watchdog or Watchdog(budget_ops=1 << 60)
    tasks = sorted(tasks, key=lambda t: t.name)
    if not views or not tasks:
        return out
    gm = views[0].group
    goals = gm.goals()
    if not goals or not any(v.blocks for v in views):
        return out
    ccs = {v.id: v for v in views if not v.connected}

    # step 2: exact shapes go straight to a goal
    for aid in sorted(ccs):
        v = ccs[aid]
        if not v.blocks:
            continue
        best = None
        for task in tasks:
            r = match_rotation(v.blocks, task.shape)
            if r is None:
                continue
            if wd.expired():
                out.complete = False
                return out
            res = a_star(gm, v.pos, nearest(goals, v.pos), v.body, cfg.max_iter,
                         orient_goal=r, counter=wd.counter)
            if res.found:
                score = (task.reward - len(res.actions), task.name)
                if best is None or score > best[0]:
                    best = (score, OptionPlan("GoSubmit", res.actions + [A.submit(task.name)],
                                              {"task": task.name}))
        if best is not None:
            out.submit[aid] = best[1]
            del ccs[aid]

    # step 3: most complete structures first
    holders = [v for v in ccs.values() if v.blocks]
    holders.sort(key=lambda v: (-completeness(v.blocks, tasks), v.id))

    # step 4: pair placements
    cands: list[Candidate] = []
    for task in tasks:
        pool = []
        for k in holders:
            kcells = set(k.cells)
            for j in holders:
                if j.id == k.id:
                    continue
                for p in pair_placements(k.blocks, j.blocks, task.shape, cfg.max_structure_size):
                    anchor = k.pos
                    if not _placement_free(j, anchor, p, kcells):
                        anchor = _goal_anchor(k, j, p, goals)
                        if anchor is None:
                            continue
                    bound = task.reward - max(manhattan(k.pos, anchor),
                                              manhattan(j.pos, add(anchor, p.joiner_cell)))
                    pool.append(Candidate(task.name, task.reward, k.id, j.id, anchor, p, bound))
        pool.sort(key=lambda c: (-c.bound, c.tiebreak()))
        cands.extend(pool[:cfg.pair_cap])
    out.candidates = cands

    # steps 5 and 6: lazy greedy
    heap = [(-c.bound, c.tiebreak(), i, False) for i, c in enumerate(cands)]
    heapq.heapify(heap)
    used: set[int] = set()
    while heap:
        neg, tb, i, evaluated = heapq.heappop(heap)
        c = cands[i]
        if c.keeper in used or c.joiner in used:
            continue
        if evaluated:
            used.update((c.keeper, c.joiner))
            out.chosen.append(c)
            _emit(out, c, ccs)
            continue
        if wd.expired():
            out.complete = False
            break
        if _evaluate(c, ccs[c.keeper], ccs[c.joiner], cfg, wd):
            heapq.heappush(heap, (-c.metric, tb, i, True))
    return out


def _goal_anchor(k: AgentView, j: AgentView, p: Placement, goals: list[Coord]) -> Coord | None:
    gm = k.group
    own = set(k.cells)
    for g in nearest(goals, k.pos, 16):
        kcells = {add(g, o) for o in k.body}
        if any(c not in own and gm.blocked_for_planning(c) for c in kcells):
            continue
        if _placement_free(j, g, p, kcells):
            return g
    return None


def _evaluate(c: Candidate, k: AgentView, j: AgentView, cfg: ReasonerConfig, wd: Watchdog) -> bool:
    gm = k.group
    kpath: list = []
    if c.anchor != k.pos:
        res = a_star(gm, k.pos, {c.anchor}, k.body, cfg.max_iter, orient_goal=0, counter=wd.counter)
        if not res.found:
            return False
        kpath = res.actions
    jpath: list = []
    target = c.joiner_target
    turns = c.placement.joiner_turns
    if target != j.pos or turns % 4:
        res = a_star(gm, j.pos, {target}, j.body, cfg.max_iter, orient_goal=turns,
                     ignore=set(j.cells), counter=wd.counter)
        if not res.found:
            return False
        jpath = res.actions
    c.keeper_path, c.joiner_path = kpath, jpath
    c.metric = c.reward - max(len(kpath), len(jpath))
    return True


def _emit(out: AssemblyResult, c: Candidate, ccs: dict[int, AgentView]) -> None:
    p = c.placement
    kb, jb = p.keeper_block, p.joiner_block
    jc = p.joiner_cell
    k_connect = A.connect(c.joiner, kb, jb)
    j_connect = A.connect(c.keeper, sub(jb, jc), sub(kb, jc))
    lk, lj = len(c.keeper_path), len(c.joiner_path)
    kacts = list(c.keeper_path) + [A.SKIP] * max(0, lj - lk) + [k_connect]
    jacts = list(c.joiner_path) + [A.SKIP] * max(0, lk - lj) + [j_connect]
    meta = {"task": c.task, "keeper": c.keeper, "joiner": c.joiner, "metric": c.metric}
    out.connect[c.keeper] = OptionPlan("GoConnect", kacts, dict(meta, partner=c.joiner, role="keeper"))
    out.connect[c.joiner] = OptionPlan("GoConnect", jacts, dict(meta, partner=c.keeper, role="joiner"))
