"""Shared builders for belief-map based tests."""

from __future__ import annotations

import random

from mapcsim.beliefs import Cell, GroupMap
from mapcsim.geometry import sub


def known_map(width, height, obstacles=(), step=0, goals=(), dispensers=None):
    """A fully known, bounded group map."""
    gm = GroupMap(group_id=1)
    obstacles = set(obstacles)
    dispensers = dispensers or {}
    for y in range(height):
        for x in range(width):
            c = (x, y)
            if c in obstacles:
                gm.knowledge[c] = Cell("obstacle", None, None, None, step)
            elif c in dispensers:
                gm.knowledge[c] = Cell("dispenser", dispensers[c], None, None, step)
            elif c in goals:
                gm.knowledge[c] = Cell("goal", None, None, None, step)
            else:
                gm.knowledge[c] = Cell("free", None, None, None, step)
    gm.limits = {"e": width, "w": -1, "s": height, "n": -1}
    gm.step = step
    return gm


def random_known_map(seed, size=15, density=0.25):
    rng = random.Random(seed)
    obstacles = {(x, y) for y in range(size) for x in range(size) if rng.random() < density}
    free = [(x, y) for y in range(size) for x in range(size) if (x, y) not in obstacles]
    start, goal = rng.sample(free, 2)
    return known_map(size, size, obstacles), start, goal


class SyncAudit:
    """Checks every group merge against simulator ground truth.

    Wraps ``mapcsim.sync.merge_groups`` for the duration of a ``with`` block.
    ``truth`` must hold the world positions the teams are currently reasoning
    about (refresh it from ``run_match``'s ``on_step`` hook).
    """

    def __init__(self, truth: dict):
        self.truth = truth
        self.merges = 0
        self.violations: list[tuple] = []

    def _offsets(self, gm):
        return {tuple(sub(self.truth[a], p)) for a, p in gm.members.items()}

    def __enter__(self):
        from mapcsim import sync

        self._sync = sync
        self._orig = sync.merge_groups

        def checked(reg, a, b, d):
            ga, gb = reg.group_of(a), reg.group_of(b)
            off_a, off_b = self._offsets(ga), self._offsets(gb)
            reg, ev = self._orig(reg, a, b, d)
            self.merges += 1
            if len(off_a) == 1 and len(off_b) == 1:
                (oa,), (ob,) = off_a, off_b
                keep = oa if ev["group"] == ga.group_id else ob
                gone = ob if keep is oa else oa
                expected = sub(gone, keep)
                if tuple(ev["shift"]) != expected:
                    self.violations.append(("shift", ev, expected))
            if len(self._offsets(reg.groups[ev["group"]])) != 1:
                self.violations.append(("frame", ev))
            return reg, ev

        sync.merge_groups = checked
        return self

    def __exit__(self, *exc):
        self._sync.merge_groups = self._orig
        return False


def audited_match(cfg):
    """Run a match while auditing every merge; returns (result, audit)."""
    from mapcsim.runner import run_match
    from mapcsim.worldgen import generate_world

    truth = {aid: a.pos for aid, a in generate_world(cfg).agents.items()}

    def refresh(world, teams, records):
        truth.clear()
        truth.update({aid: a.pos for aid, a in world.agents.items()})

    with SyncAudit(truth) as audit:
        result = run_match(cfg, on_step=refresh)
    return result, audit


def synced_core(world, team="A"):
    """A TeamCore whose agents already share one group frame equal to world
    coordinates, with the current percepts integrated."""
    from mapcsim.sync import SyncRegistry
    from mapcsim.teamcore import TeamCore
    from mapcsim.world import all_percepts

    ids = sorted(a for a, ag in world.agents.items() if ag.team == team)
    core = TeamCore(team, ids, random.Random(0))
    gm = GroupMap(ids[0], members={a: world.agents[a].pos for a in ids})
    gm.limits = {"e": world.width, "w": -1, "s": world.height, "n": -1}
    core.registry = SyncRegistry({ids[0]: gm}, {a: ids[0] for a in ids})
    percepts = all_percepts(world)
    views = core.observe({a: percepts[a] for a in ids})
    return core, views
