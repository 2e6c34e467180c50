"""Option builders. Local options need only the agent's own view; Hoard and
Roam are assigned at group level but built per agent here."""

from __future__ import annotations

from typing import Iterable

from .. import actions as A
from ..config import WorldParams
from ..geometry import DIR_ORDER, DIRS, Coord, add, manhattan, rotate, sub
from ..beliefs import frontier_targets
from ..pathfind import a_star, escape_path
from ..teamcore import AgentView
from .config import ReasonerConfig
from .plans import OptionPlan

NEAREST_GOALS = 64
DIG_RADIUS = 8


def nearest(cells: Iterable[Coord], pos: Coord, n: int = NEAREST_GOALS) -> list[Coord]:
    return sorted(cells, key=lambda c: (manhattan(c, pos), c))[:n]


def danger_cells(view: AgentView, now: int) -> set[Coord]:
    return {c for c, t in view.group.markers.items() if t >= now}


def path_to(view: AgentView, goals, cfg: ReasonerConfig, counter=None, max_iter=None, **kw):
    return a_star(view.group, view.pos, goals, view.body, max_iter or cfg.max_iter,
                  counter=counter, **kw)


# -- local options --------------------------------------------------------------


def dodge_option(view: AgentView, now: int, cfg: ReasonerConfig, counter=None) -> OptionPlan | None:
    danger = danger_cells(view, now)
    if not danger or not danger.intersection(view.cells):
        return None
    res = escape_path(view.group, view.pos, view.body, danger, cfg.max_iter)
    if counter is not None:
        counter[0] += res.iterations
    if not res.found or not res.actions:
        return None
    return OptionPlan("Dodge", res.actions)


def go_near_submit_option(view: AgentView, cfg: ReasonerConfig, counter=None) -> OptionPlan | None:
    goals = view.group.goals()
    if not goals or view.pos in goals:
        return None
    res = path_to(view, nearest(goals, view.pos), cfg, counter)
    if not res.found or not res.actions:
        return None
    return OptionPlan("GoNearSubmit", res.actions, {"target": res.end[:2]})


def dig_option(view: AgentView, rules: WorldParams, cfg: ReasonerConfig, counter=None) -> OptionPlan | None:
    if view.energy < rules.clear_cost:
        return None
    gm = view.group
    obstacles = [c for c in gm.cells_of("obstacle") if manhattan(c, view.pos) <= DIG_RADIUS]
    if not obstacles:
        return None
    obs = set(obstacles)
    charges = [None] * rules.clear_charge_steps

    def adjacent_obstacle(c: Coord) -> Coord | None:
        for d in DIR_ORDER:
            n = add(c, DIRS[d])
            if n in obs:
                return n
        return None

    target = adjacent_obstacle(view.pos)
    if target is not None:
        return OptionPlan("Dig", [A.clear(sub(target, view.pos)) for _ in charges],
                          {"target": target})
    goals = {add(o, DIRS[d]) for o in obstacles for d in DIR_ORDER}
    goals = {g for g in goals if not gm.blocked_for_planning(g)}
    if not goals:
        return None
    res = path_to(view, nearest(goals, view.pos), cfg, counter)
    if not res.found or not res.actions:
        return None
    end = res.end[:2]
    target = adjacent_obstacle(end)
    return OptionPlan("Dig", res.actions + [A.clear(sub(target, end)) for _ in charges],
                      {"target": target})


# -- hoarding -----------------------------------------------------------------------


def structure_useful(blocks: dict[Coord, str], tasks) -> bool:
    """Whether the carried blocks fit inside some active task under some rotation."""
    for task in tasks:
        target = task.shape.as_dict()
        for r in range(4):
            if all(target.get(rotate(o, r)) == t for o, t in blocks.items()):
                return True
    return False


def needed_types(tasks) -> set[str]:
    return {t for task in tasks for _, t in task.shape.entries}


def drop_option(view: AgentView, tasks) -> OptionPlan | None:
    """Shed cargo that no active task can use, so hoarding can start over."""
    if not view.blocks or view.connected or not tasks or structure_useful(view.blocks, tasks):
        return None
    d = view.anchor_dir
    if d is None:
        adjacent = [d for d in DIR_ORDER if DIRS[d] in view.blocks]
        if not adjacent:
            return None
        d = adjacent[0]
    return OptionPlan("Hoard", [A.detach(d)], {"drop": True})


def hoard_option(
    view: AgentView,
    tasks,
    now: int,
    cfg: ReasonerConfig,
    counter=None,
    avoid: Iterable[Coord] = (),
) -> OptionPlan | None:
    if view.connected:
        return None
    if len(view.blocks) >= cfg.max_hoard:
        return drop_option(view, tasks)
    gm = view.group
    wanted = needed_types(tasks)
    avoid = set(avoid)
    dispensers = {c: t for c, t in gm.dispensers().items()
                  if c not in avoid and (not wanted or t in wanted)
                  and cfg.is_block_interesting(t, view.id, tasks)}
    if not dispensers:
        return None
    body = [o for o in view.body if o != (0, 0)]

    def stance_dir(c: Coord, r: int) -> str | None:
        carried = {rotate(o, r) for o in body}
        for d in DIR_ORDER:
            if add(c, DIRS[d]) in dispensers and DIRS[d] not in carried:
                return d
        return None

    def finish(c: Coord, d: str) -> list[A.Action]:
        disp = add(c, DIRS[d])
        cell = gm.knowledge.get(disp)
        loose = cell is not None and cell.occupant == "block" and cell.seen == now
        return [A.attach(d)] if loose else [A.request(d), A.attach(d)]

    d = stance_dir(view.pos, 0)
    if d is not None:
        return OptionPlan("Hoard", finish(view.pos, d), {"target": add(view.pos, DIRS[d])})
    goals = {add(c, DIRS[d]) for c in dispensers for d in DIR_ORDER}
    goals = {g for g in goals if not gm.blocked_for_planning(g) and g not in dispensers}
    if not goals:
        return None
    res = path_to(view, nearest(goals, view.pos), cfg, counter,
                  goal_pred=lambda c, r: stance_dir(c, r) is not None)
    if not res.found or not res.actions:
        return None
    end, r = res.end[:2], res.end[2]
    d = stance_dir(end, r)
    return OptionPlan("Hoard", res.actions + finish(end, d), {"target": add(end, DIRS[d])})


# -- exploration ---------------------------------------------------------------------


def roam_plans(views: list[AgentView], cfg: ReasonerConfig, rng, counter=None) -> dict[int, OptionPlan]:
    """Send each agent towards a distinct frontier target of its group map."""
    if not views:
        return {}
    gm = views[0].group
    targets = frontier_targets(gm, len(views))
    out: dict[int, OptionPlan] = {}
    free = list(targets)
    for v in sorted(views, key=lambda v: v.id):
        target = None
        if free:
            target = min(free, key=lambda c: (manhattan(c, v.pos), c))
            free.remove(target)
        acts = []
        if target is not None and target != v.pos:
            res = path_to(v, {target}, cfg, counter)
            acts = res.actions if res.found else res.partial
        if not acts:
            d = rng.choice(DIR_ORDER)
            acts = [A.move(d)]
        out[v.id] = OptionPlan("Roam", list(acts), {"target": target})
    return out
