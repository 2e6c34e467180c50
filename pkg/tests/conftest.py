from __future__ import annotations

import random

import pytest

from mapcsim.config import TaskParams, WorldParams
from mapcsim.world import AgentEntity, Task, WorldState


def make_world(
    width=10,
    height=10,
    *,
    agents=(),
    obstacles=(),
    dispensers=None,
    goals=(),
    blocks=(),
    tasks=(),
    seed=0,
    **params,
) -> WorldState:
    """Hand-built world with task/event spawning switched off.

    ``agents`` holds ``(id, team, pos)`` triples; ``blocks`` holds
    ``(pos, type)`` pairs of loose blocks.
    """
    wp = WorldParams(width=width, height=height, clear_event_rate=0.0, **params)
    tp = TaskParams(spawn_probability=0.0, max_active=0)
    world = WorldState(wp, tp, width, height, set(obstacles), dict(dispensers or {}),
                       set(goals), random.Random(seed))
    for aid, team, pos in agents:
        world.add_agent(AgentEntity(aid, team, pos, wp.max_energy))
    for pos, btype in blocks:
        world.add_block(pos, btype)
    world.initial_blocks = len(world.blocks)
    for t in tasks:
        world.tasks[t.name] = t
    return world


def attach_block(world: WorldState, agent_id: int, pos, btype="b0"):
    b = world.add_block(pos, btype)
    world.initial_blocks += 1
    world.link(("a", agent_id), ("b", b.id))
    return b


@pytest.fixture
def world_factory():
    return make_world


def task(name, entries, reward=None, deadline=100):
    from mapcsim.shapes import TaskShape

    shape = TaskShape.of(entries)
    return Task(name, reward if reward is not None else 10 * len(shape), deadline, shape)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
