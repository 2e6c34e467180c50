"""Grid coordinates, directions and rotations.

Coordinates are plain ``(x, y)`` tuples with x growing east and y growing
south, in world, group-frame or agent-relative terms depending on context.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable

Coord = tuple[int, int]

DIRS: dict[str, Coord] = {"n": (0, -1), "s": (0, 1), "e": (1, 0), "w": (-1, 0)}
DIR_OF: dict[Coord, str] = {v: k for k, v in DIRS.items()}
DIR_ORDER = ("n", "e", "s", "w")
ORIGIN: Coord = (0, 0)


def add(a: Coord, b: Coord) -> Coord:
    return (a[0] + b[0], a[1] + b[1])


def sub(a: Coord, b: Coord) -> Coord:
    return (a[0] - b[0], a[1] - b[1])


def neg(a: Coord) -> Coord:
    return (-a[0], -a[1])


def manhattan(a: Coord, b: Coord = ORIGIN) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def neighbors4(c: Coord) -> list[Coord]:
    x, y = c
    return [(x, y - 1), (x + 1, y), (x, y + 1), (x - 1, y)]


def rotate_cw(c: Coord) -> Coord:
    return (-c[1], c[0])


def rotate_ccw(c: Coord) -> Coord:
    return (c[1], -c[0])


def rotate(c: Coord, quarter_turns: int) -> Coord:
    """Rotate an offset clockwise by ``quarter_turns`` * 90 degrees."""
    q = quarter_turns % 4
    x, y = c
    if q == 0:
        return (x, y)
    if q == 1:
        return (-y, x)
    if q == 2:
        return (-x, -y)
    return (y, -x)


def rotate_dir(d: str, quarter_turns: int) -> str:
    return DIR_OF[rotate(DIRS[d], quarter_turns)]


def is_connected(cells: Iterable[Coord]) -> bool:
    cells = set(cells)
    if not cells:
        return True
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        c = stack.pop()
        for n in neighbors4(c):
            if n in cells and n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(cells)


@lru_cache(maxsize=None)
def diamond(radius: int) -> tuple[Coord, ...]:
    """All offsets with Manhattan norm <= radius, in row-major order."""
    return tuple(
        (dx, dy)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if abs(dx) + abs(dy) <= radius
    )
