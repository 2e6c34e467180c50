"""Task shapes: block layouts relative to the submitting agent."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .geometry import ORIGIN, Coord, is_connected, neighbors4, rotate

ANCHOR: Coord = (0, 1)


@dataclass(frozen=True)
class TaskShape:
    entries: tuple[tuple[Coord, str], ...]

    @classmethod
    def of(cls, entries: Iterable[tuple[Coord, str]]) -> "TaskShape":
        return cls(tuple(sorted((tuple(o), t) for o, t in entries)))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def offsets(self) -> frozenset[Coord]:
        return frozenset(o for o, _ in self.entries)

    def as_dict(self) -> dict[Coord, str]:
        return dict(self.entries)

    def rotated(self, quarter_turns: int) -> "TaskShape":
        return TaskShape.of((rotate(o, quarter_turns), t) for o, t in self.entries)

    def is_valid(self) -> bool:
        offs = [o for o, _ in self.entries]
        if not offs or ORIGIN in offs or len(set(offs)) != len(offs):
            return False
        return is_connected(set(offs) | {ORIGIN})

    def to_json(self) -> list:
        return [[o[0], o[1], t] for o, t in self.entries]

    @classmethod
    def from_json(cls, data: list) -> "TaskShape":
        return cls.of(((x, y), t) for x, y, t in data)


def enumerate_layouts(k: int) -> list[frozenset[Coord]]:
    """All block layouts of ``k`` 4-connected blocks containing the south
    anchor (0, 1) and avoiding the agent cell, sorted for determinism."""
    if k < 1:
        return []
    layouts = {frozenset([ANCHOR])}
    for _ in range(k - 1):
        grown = set()
        for cells in layouts:
            for c in cells:
                for n in neighbors4(c):
                    if n != ORIGIN and n not in cells:
                        grown.add(cells | {n})
        layouts = grown
    return sorted(layouts, key=lambda s: sorted(s))


def match_rotation(carried: dict[Coord, str], shape: TaskShape) -> int | None:
    """Quarter turns that make the carried blocks equal the task shape, if any."""
    target = shape.as_dict()
    if len(carried) != len(target):
        return None
    for r in range(4):
        if {rotate(o, r): t for o, t in carried.items()} == target:
            return r
    return None
