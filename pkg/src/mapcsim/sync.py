"""Mutual-sighting synchronization of agent groups.

Two agents may be linked when one of them is the only teammate reporting a
friendly entity at offset ``d`` and the other is the only teammate reporting
one at ``-d``. Every teammate sees every teammate within range (vision is
symmetric), so the two reports must describe each other.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .beliefs import GroupMap, merge_maps
from .geometry import Coord, add, neg, sub
from .world import Percept


@dataclass(frozen=True)
class SightingReport:
    observer: int
    offset: Coord


def sighting_reports(percepts: Mapping[int, Percept]) -> list[SightingReport]:
    return [
        SightingReport(aid, t.rel)
        for aid in sorted(percepts)
        for t in percepts[aid].things
        if t.kind == "friend"
    ]


def find_unique_pairs(
    reports: Iterable[SightingReport],
    agent_to_group: Mapping[int, int] | None = None,
) -> list[tuple[int, int, Coord]]:
    """Pairs ``(a, b, d)`` with ``a < b`` where ``a`` alone reports a friend at
    ``d`` and ``b`` alone reports one at ``-d``."""
    observers: dict[Coord, set[int]] = defaultdict(set)
    for r in reports:
        if r.offset != (0, 0):
            observers[r.offset].add(r.observer)
    pairs = []
    for d, who in observers.items():
        if len(who) != 1:
            continue
        back = observers.get(neg(d), ())
        if len(back) != 1:
            continue
        (a,), (b,) = tuple(who), tuple(back)
        if a >= b:
            continue
        if agent_to_group is not None and agent_to_group[a] == agent_to_group[b]:
            continue
        pairs.append((a, b, d))
    pairs.sort(key=lambda p: (p[0], p[1], p[2]))
    return pairs


@dataclass
class SyncRegistry:
    groups: dict[int, GroupMap] = field(default_factory=dict)
    agent_to_group: dict[int, int] = field(default_factory=dict)
    master_group_id: int | None = None
    merges: int = 0

    @classmethod
    def for_agents(cls, agent_ids: Iterable[int]) -> "SyncRegistry":
        reg = cls()
        for aid in sorted(agent_ids):
            reg.groups[aid] = GroupMap.founding(aid)
            reg.agent_to_group[aid] = aid
        return reg

    def group_of(self, agent_id: int) -> GroupMap:
        return self.groups[self.agent_to_group[agent_id]]

    def set_master(self, group_id: int) -> None:
        if self.master_group_id is not None and self.master_group_id != group_id:
            raise ValueError("mastergroup is already set")
        if group_id not in self.groups:
            raise KeyError(group_id)
        self.master_group_id = group_id

    def fully_synced(self) -> bool:
        return len(self.groups) == 1


def merge_groups(reg: SyncRegistry, a: int, b: int, d: Coord) -> tuple[SyncRegistry, dict]:
    """Join the groups of ``a`` and ``b`` given that ``a`` sees ``b`` at ``d``."""
    ga_id, gb_id = reg.agent_to_group[a], reg.agent_to_group[b]
    if ga_id == gb_id:
        raise ValueError("agents already share a group")
    ga, gb = reg.groups[ga_id], reg.groups[gb_id]
    shift = sub(add(ga.members[a], d), gb.members[b])
    if gb_id == reg.master_group_id:
        keep, gone, applied = gb, ga, neg(shift)
    else:
        keep, gone, applied = ga, gb, shift
    merged = merge_maps(keep, gone, applied)
    del reg.groups[gone.group_id]
    reg.groups[merged.group_id] = merged
    for aid in gone.members:
        reg.agent_to_group[aid] = merged.group_id
    reg.merges += 1
    event = {
        "type": "sync", "agents": [a, b], "offset": list(d), "shift": list(applied),
        "group": merged.group_id, "absorbed": gone.group_id,
        "size": len(merged.members), "groups": len(reg.groups),
    }
    return reg, event


def sync_step(reg: SyncRegistry, percepts: Mapping[int, Percept]) -> tuple[SyncRegistry, int, list[dict]]:
    pairs = find_unique_pairs(sighting_reports(percepts), reg.agent_to_group)
    count = 0
    events = []
    for a, b, d in pairs:
        if reg.agent_to_group[a] == reg.agent_to_group[b]:
            continue
        reg, ev = merge_groups(reg, a, b, d)
        events.append(ev)
        count += 1
    return reg, count, events
