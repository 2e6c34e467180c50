"""Uncoordinated random team used as a reference opponent."""

from __future__ import annotations

import random

from . import actions as A
from .actions import Action
from .geometry import DIR_ORDER
from .world import Percept


class RandomTeam:
    engine = "random"

    def __init__(self, name: str, agent_ids, seed: int = 0):
        self.name = name
        self.agent_ids = sorted(agent_ids)
        self.rng = random.Random(f"{seed}:{name}")

    def group_id(self, aid: int) -> int:
        return aid

    def drain_events(self) -> list[dict]:
        return []

    def _pick(self, p: Percept) -> Action:
        rng = self.rng
        roll = rng.random()
        d = rng.choice(DIR_ORDER)
        if roll < 0.6:
            return A.move(d)
        if roll < 0.7:
            return A.rotate(rng.choice(("cw", "ccw")))
        if roll < 0.78:
            return A.request(d)
        if roll < 0.86:
            return A.attach(d)
        if roll < 0.9:
            return A.detach(d)
        if roll < 0.95 and p.tasks:
            return A.submit(rng.choice(p.tasks).name)
        return A.SKIP

    def decide(self, percepts: dict[int, Percept]) -> dict[int, Action]:
        return {aid: self._pick(percepts[aid]) for aid in self.agent_ids}
