"""Role assignments for building a task shape with one block per agent.

The commander stands at the origin (a goal cell) holding the entry next to
it. Lieutenants join one at a time, each bringing the entry that touches the
structure built so far, from a standing cell beside that entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..geometry import DIR_ORDER, DIRS, Coord, add, neighbors4, sub
from ..shapes import TaskShape


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class RoleAssignment:
    role: str
    index: int
    block_type: str
    block_offset: Coord  # where the block ends up, relative to the commander
    goal_offset: Coord  # where the agent stands, relative to the commander
    connect_dir: str  # direction from the agent to its block
    connect_to: Coord | None  # structure block it joins (lieutenants only)

    @property
    def block_rel(self) -> Coord:
        return sub(self.block_offset, self.goal_offset)


def _dir_between(a: Coord, b: Coord) -> str:
    d = sub(b, a)
    for name in DIR_ORDER:
        if DIRS[name] == d:
            return name
    raise ValueError(f"{a} and {b} are not adjacent")


def _build_order(shape: dict[Coord, str], first: Coord) -> list[Coord]:
    order, built = [first], {first}
    while len(order) < len(shape):
        nxt = min(c for c in shape if c not in built and any(n in built for n in neighbors4(c)))
        order.append(nxt)
        built.add(nxt)
    return order


def plan_block_placements(
    shape: TaskShape,
    k: int | None = None,
    free: Callable[[Coord], bool] | None = None,
) -> list[RoleAssignment]:
    """Commander first, then lieutenants in connect order.

    ``free(offset)`` may veto standing cells (offsets relative to the
    commander). Raises PlacementError when no consistent assignment exists.
    """
    entries = shape.as_dict()
    if k is not None and k != len(entries):
        raise PlacementError(f"shape has {len(entries)} blocks, not {k}")
    if not entries:
        raise PlacementError("empty shape")
    ok = free or (lambda c: True)
    if not ok((0, 0)):
        raise PlacementError("commander cell unavailable")
    cells = set(entries)
    for first in sorted(c for c in cells if c in neighbors4((0, 0))):
        if not ok(first):
            continue
        order = _build_order(entries, first)
        commander = RoleAssignment("commander", 0, entries[first], first, (0, 0),
                                   _dir_between((0, 0), first), None)
        links, built = [], {first}
        for block in order[1:]:
            links.append((block, min(n for n in neighbors4(block) if n in built)))
            built.add(block)
        stances = _assign_stances(links, cells, ok)
        if stances is None:
            continue
        out = [commander]
        for i, ((block, joins), stand) in enumerate(zip(links, stances), start=1):
            out.append(RoleAssignment("lieutenant", i, entries[block], block, stand,
                                      _dir_between(stand, block), joins))
        return out
    raise PlacementError("no consistent placement")


def _assign_stances(links: list[tuple[Coord, Coord]], shape_cells: set[Coord], ok) -> list[Coord] | None:
    """Distinct standing cells, preferring the one straight behind each block."""
    taken = set(shape_cells) | {(0, 0)}
    chosen: list[Coord] = []

    def search(i: int) -> bool:
        if i == len(links):
            return True
        block, joins = links[i]
        if not ok(block):
            return False
        behind = add(block, sub(block, joins))
        options = [behind] + [add(block, DIRS[d]) for d in DIR_ORDER if add(block, DIRS[d]) != behind]
        for stand in options:
            if stand in taken or not ok(stand):
                continue
            taken.add(stand)
            chosen.append(stand)
            if search(i + 1):
                return True
            taken.discard(stand)
            chosen.pop()
        return False

    return chosen if search(0) else None
