"""Seeded world generation: obstacle scatter with smoothing, goal clusters,
dispensers and agent spawns inside the largest open region."""

from __future__ import annotations

import random
from collections import deque

from .config import MatchConfig
from .geometry import Coord, neighbors4
from .world import AgentEntity, WorldState


def _smooth(obstacles: set[Coord], width: int, height: int) -> set[Coord]:
    out = set(obstacles)
    for y in range(height):
        for x in range(width):
            if (x, y) in obstacles:
                continue
            walls = sum(1 for n in neighbors4((x, y)) if n in obstacles)
            if walls >= 3:
                out.add((x, y))
    return out


def _largest_region(free: set[Coord]) -> list[Coord]:
    best: list[Coord] = []
    seen: set[Coord] = set()
    for start in sorted(free):
        if start in seen:
            continue
        region = [start]
        seen.add(start)
        q = deque([start])
        while q:
            c = q.popleft()
            for n in neighbors4(c):
                if n in free and n not in seen:
                    seen.add(n)
                    region.append(n)
                    q.append(n)
        if len(region) > len(best):
            best = region
    return sorted(best)


def _grow_cluster(center: Coord, size: int, allowed: set[Coord]) -> list[Coord]:
    out = [center]
    seen = {center}
    q = deque([center])
    while q and len(out) < size:
        c = q.popleft()
        for n in neighbors4(c):
            if n in allowed and n not in seen and len(out) < size:
                seen.add(n)
                out.append(n)
                q.append(n)
    return out


def generate_world(config: MatchConfig) -> WorldState:
    p = config.world
    rng = random.Random(config.seed)
    w, h = p.width, p.height
    cells = [(x, y) for y in range(h) for x in range(w)]
    obstacles = {c for c in cells if rng.random() < p.obstacle_density}
    for _ in range(p.smoothing_passes):
        obstacles = _smooth(obstacles, w, h)
    region = _largest_region(set(cells) - obstacles)
    region_set = set(region)

    goals: set[Coord] = set()
    for _ in range(p.goal_clusters):
        center = rng.choice(region)
        goals.update(_grow_cluster(center, p.goal_cluster_size, region_set))

    dispensers: dict[Coord, str] = {}
    candidates = [c for c in region if c not in goals]
    for btype in p.block_types:
        for _ in range(p.dispensers_per_type):
            c = rng.choice(candidates)
            while c in dispensers:
                c = rng.choice(candidates)
            dispensers[c] = btype

    world = WorldState(params=p, task_params=config.tasks, width=w, height=h,
                       obstacles=obstacles, dispensers=dispensers, goals=goals, rng=rng)
    spawnable = [c for c in region if c not in dispensers and c not in goals]
    taken: set[Coord] = set()
    next_id = 1
    for team in config.teams:
        world.scores[team.name] = 0
        if p.spawn == "cluster":
            center = rng.choice(spawnable)
            near = sorted(spawnable, key=lambda c: (abs(c[0] - center[0]) + abs(c[1] - center[1]), c))
            pool = [c for c in near if c not in taken][: max(team.agents * 3, team.agents)]
        else:
            pool = [c for c in spawnable if c not in taken]
        picks = rng.sample(pool, team.agents)
        for pos in picks:
            taken.add(pos)
            world.add_agent(AgentEntity(next_id, team.name, pos, p.max_energy))
            next_id += 1
    return world
