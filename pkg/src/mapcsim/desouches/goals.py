from __future__ import annotations

import random

from ..beliefs import GroupMap
from ..geometry import Coord, manhattan

WALK_MIN = 5
WALK_MAX = 15


def walk_sync_goal(gm: GroupMap, pos: Coord, rng: random.Random,
                   d_min: int = WALK_MIN, d_max: int = WALK_MAX) -> Coord:
    """A random cell at Manhattan distance in ``[d_min, d_max]`` from ``pos``.

    Cells known to be obstacles or beyond a learned border are redrawn a few
    times before giving up and returning the last draw.
    """
    target = pos
    for _ in range(8):
        dist = rng.randint(d_min, d_max)
        dx = rng.randint(-dist, dist)
        dy = (dist - abs(dx)) * rng.choice((-1, 1))
        target = (pos[0] + dx, pos[1] + dy)
        cell = gm.knowledge.get(target)
        if not gm.outside(target) and (cell is None or cell.terrain != "obstacle"):
            break
    return target


def search_destroy_goal(gm: GroupMap, pos: Coord, energy: int, clear_cost: int) -> Coord | None:
    """Nearest known obstacle, or None when there is none or energy is short."""
    if energy < clear_cost:
        return None
    obstacles = gm.cells_of("obstacle")
    if not obstacles:
        return None
    return min(obstacles, key=lambda c: (manhattan(c, pos), c))
