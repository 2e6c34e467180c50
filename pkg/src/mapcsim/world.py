"""Ground-truth grid simulator.

The world is the single writer of match state. Each call to :func:`step_world`
resolves one action per agent in ascending agent id order against the state
as it evolves, then advances the clock: energy recharge, clear-event
detonation, task expiry and spawning. Invalid actions never raise; they turn
into ``failed_<reason>`` results.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import NamedTuple

from . import actions as A
from .actions import Action
from .config import TaskParams, WorldParams
from .geometry import DIRS, Coord, add, diamond, manhattan, rotate_ccw, rotate_cw, sub
from .shapes import TaskShape, enumerate_layouts

Key = tuple[str, int]  # ("a", agent id) or ("b", block id)


@dataclass
class AgentEntity:
    id: int
    team: str
    pos: Coord
    energy: int
    charge_target: Coord | None = None
    charge_steps: int = 0
    last_action: Action = A.SKIP
    last_result: str = A.SUCCESS


@dataclass
class Block:
    id: int
    type: str
    pos: Coord


@dataclass(frozen=True)
class Task:
    name: str
    reward: int
    deadline: int
    shape: TaskShape

    def to_json(self) -> dict:
        return {"name": self.name, "reward": self.reward, "deadline": self.deadline,
                "shape": self.shape.to_json()}


@dataclass(frozen=True)
class ClearEvent:
    center: Coord
    radius: int
    detonation_step: int

    def cells(self) -> list[Coord]:
        return [add(self.center, o) for o in diamond(self.radius)]


class Thing(NamedTuple):
    rel: Coord
    kind: str  # friend | foe | block | dispenser | obstacle | goal | marker
    detail: str | int | None = None


@dataclass(frozen=True)
class Percept:
    step: int
    energy: int
    last_action: Action
    last_result: str
    vision: int
    things: tuple[Thing, ...]
    attached: tuple[Coord, ...]
    tasks: tuple[Task, ...]
    score: int

    def kinds_at(self, rel: Coord) -> list[Thing]:
        return [t for t in self.things if t.rel == rel]

    def attached_blocks(self) -> dict[Coord, str]:
        """Attached block offsets and types (excludes attached agents)."""
        att = set(self.attached)
        return {t.rel: t.detail for t in self.things if t.kind == "block" and t.rel in att}

    def attached_agents(self) -> list[Coord]:
        att = set(self.attached)
        return [t.rel for t in self.things if t.kind == "friend" and t.rel in att]


@dataclass
class WorldState:
    params: WorldParams
    task_params: TaskParams
    width: int
    height: int
    obstacles: set[Coord]
    dispensers: dict[Coord, str]
    goals: set[Coord]
    rng: random.Random
    agents: dict[int, AgentEntity] = field(default_factory=dict)
    blocks: dict[int, Block] = field(default_factory=dict)
    edges: dict[Key, set[Key]] = field(default_factory=dict)
    tasks: dict[str, Task] = field(default_factory=dict)
    expired_tasks: set[str] = field(default_factory=set)
    clear_events: list[ClearEvent] = field(default_factory=list)
    step: int = 0
    scores: dict[str, int] = field(default_factory=dict)
    next_block_id: int = 1
    next_task_id: int = 1
    created: int = 0
    destroyed_by_clear: int = 0
    consumed_by_submit: int = 0
    initial_blocks: int = 0
    agent_at: dict[Coord, int] = field(default_factory=dict)
    block_at: dict[Coord, int] = field(default_factory=dict)

    # -- queries ---------------------------------------------------------

    def in_bounds(self, c: Coord) -> bool:
        return 0 <= c[0] < self.width and 0 <= c[1] < self.height

    def pos_of(self, key: Key) -> Coord:
        return self.agents[key[1]].pos if key[0] == "a" else self.blocks[key[1]].pos

    def key_at(self, c: Coord) -> Key | None:
        if c in self.agent_at:
            return ("a", self.agent_at[c])
        if c in self.block_at:
            return ("b", self.block_at[c])
        return None

    def component(self, key: Key) -> set[Key]:
        seen = {key}
        stack = [key]
        while stack:
            k = stack.pop()
            for n in self.edges.get(k, ()):
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
        return seen

    def footprint(self, agent_id: int) -> set[Coord]:
        return {self.pos_of(k) for k in self.component(("a", agent_id))}

    def is_free(self, c: Coord) -> bool:
        return (self.in_bounds(c) and c not in self.obstacles
                and c not in self.agent_at and c not in self.block_at)

    # -- mutation helpers -------------------------------------------------

    def add_agent(self, agent: AgentEntity) -> None:
        assert agent.pos not in self.agent_at and agent.pos not in self.block_at
        self.agents[agent.id] = agent
        self.agent_at[agent.pos] = agent.id
        self.scores.setdefault(agent.team, 0)

    def add_block(self, pos: Coord, btype: str) -> Block:
        assert pos not in self.block_at and pos not in self.agent_at
        b = Block(self.next_block_id, btype, pos)
        self.next_block_id += 1
        self.blocks[b.id] = b
        self.block_at[pos] = b.id
        return b

    def link(self, a: Key, b: Key) -> None:
        assert manhattan(self.pos_of(a), self.pos_of(b)) == 1
        self.edges.setdefault(a, set()).add(b)
        self.edges.setdefault(b, set()).add(a)

    def unlink(self, a: Key, b: Key) -> None:
        self.edges.get(a, set()).discard(b)
        self.edges.get(b, set()).discard(a)

    def remove_block(self, block_id: int) -> None:
        b = self.blocks.pop(block_id)
        del self.block_at[b.pos]
        key = ("b", block_id)
        for n in self.edges.pop(key, set()):
            self.edges[n].discard(key)

    def _relocate(self, moves: dict[Key, Coord]) -> None:
        for k in moves:
            p = self.pos_of(k)
            if k[0] == "a":
                del self.agent_at[p]
            else:
                del self.block_at[p]
        for k, p in moves.items():
            if k[0] == "a":
                self.agents[k[1]].pos = p
                self.agent_at[p] = k[1]
            else:
                self.blocks[k[1]].pos = p
                self.block_at[p] = k[1]

    # -- hashing -----------------------------------------------------------

    def state_hash(self) -> str:
        agents = tuple(
            (a.id, a.team, a.pos, a.energy, a.charge_target, a.charge_steps, a.last_result)
            for a in sorted(self.agents.values(), key=lambda a: a.id)
        )
        blocks = tuple((b.id, b.type, b.pos) for b in sorted(self.blocks.values(), key=lambda b: b.id))
        edges = tuple(sorted((k, tuple(sorted(v))) for k, v in self.edges.items() if v))
        tasks = tuple(sorted((t.name, t.reward, t.deadline, t.shape.entries) for t in self.tasks.values()))
        events = tuple((e.center, e.radius, e.detonation_step) for e in self.clear_events)
        payload = repr((
            self.step, tuple(sorted(self.obstacles)), agents, blocks, edges, tasks, events,
            tuple(sorted(self.scores.items())), self.next_block_id, self.next_task_id,
            self.rng.getstate(),
        ))
        return hashlib.sha256(payload.encode()).hexdigest()


# -- action resolution -------------------------------------------------------


def move_component(world: WorldState, agent_id: int, d: str) -> str:
    """Translate the agent's whole attached component by one cell."""
    if d not in DIRS:
        return A.failed("parameter")
    delta = DIRS[d]
    comp = world.component(("a", agent_id))
    moves = {k: add(world.pos_of(k), delta) for k in comp}
    for dest in moves.values():
        if not world.in_bounds(dest):
            return A.failed("out_of_bounds")
        if dest in world.obstacles:
            return A.failed("path_blocked")
        occ = world.key_at(dest)
        if occ is not None and occ not in comp:
            return A.failed("path_blocked")
    world._relocate(moves)
    return A.SUCCESS


def rotate_component(world: WorldState, agent_id: int, d: str) -> str:
    if d not in ("cw", "ccw"):
        return A.failed("parameter")
    comp = world.component(("a", agent_id))
    if sum(1 for k in comp if k[0] == "a") > 1:
        return A.failed("multi_agent_rotation")
    pivot = world.agents[agent_id].pos
    turn = rotate_cw if d == "cw" else rotate_ccw
    moves = {}
    for k in comp:
        if k[0] == "b":
            moves[k] = add(pivot, turn(sub(world.pos_of(k), pivot)))
    for dest in moves.values():
        if not world.in_bounds(dest):
            return A.failed("out_of_bounds")
        if dest in world.obstacles:
            return A.failed("path_blocked")
        occ = world.key_at(dest)
        if occ is not None and occ not in comp:
            return A.failed("path_blocked")
    world._relocate(moves)
    return A.SUCCESS


def _blockers(world: WorldState, agent_id: int, act: Action) -> list[int]:
    """Agents owning whatever stopped a failed move or rotation (empty for
    terrain and loose blocks)."""
    comp = world.component(("a", agent_id))
    if act.kind == "move":
        delta = DIRS[act.dir]
        dests = [add(world.pos_of(k), delta) for k in comp]
    else:
        pivot = world.agents[agent_id].pos
        turn = rotate_cw if act.dir == "cw" else rotate_ccw
        dests = [add(pivot, turn(sub(world.pos_of(k), pivot))) for k in comp if k[0] == "b"]
    owners: set[int] = set()
    for c in dests:
        occ = world.key_at(c)
        if occ is not None and occ not in comp:
            owners.update(k[1] for k in world.component(occ) if k[0] == "a")
    return sorted(owners)


def resolve_submit(world: WorldState, agent_id: int, task_name: str | None) -> str:
    agent = world.agents[agent_id]
    if task_name in world.expired_tasks:
        return A.failed("deadline_passed")
    task = world.tasks.get(task_name)
    if task is None:
        return A.failed("unknown_task")
    if world.step > task.deadline:
        return A.failed("deadline_passed")
    if agent.pos not in world.goals:
        return A.failed("not_on_goal")
    comp = world.component(("a", agent_id))
    if any(k[0] == "a" and k[1] != agent_id for k in comp):
        return A.failed("other_agent_attached")
    carried = {sub(world.blocks[k[1]].pos, agent.pos): world.blocks[k[1]].type
               for k in comp if k[0] == "b"}
    if carried != task.shape.as_dict():
        return A.failed("wrong_structure")
    for k in comp:
        if k[0] == "b":
            world.remove_block(k[1])
            world.consumed_by_submit += 1
    world.scores[agent.team] = world.scores.get(agent.team, 0) + task.reward
    return A.SUCCESS


def _strip_blocks(world: WorldState, agent_id: int) -> int:
    comp = world.component(("a", agent_id))
    n = 0
    for k in sorted(comp):
        if k[0] == "b":
            world.remove_block(k[1])
            n += 1
    return n


def _clear_cell(world: WorldState, c: Coord) -> int:
    """Remove obstacle/block at ``c`` and strip an agent standing there."""
    destroyed = 0
    world.obstacles.discard(c)
    if c in world.block_at:
        world.remove_block(world.block_at[c])
        destroyed += 1
    if c in world.agent_at:
        destroyed += _strip_blocks(world, world.agent_at[c])
    world.destroyed_by_clear += destroyed
    return destroyed


def resolve_clear(world: WorldState, agent_id: int, rel: Coord | None) -> str:
    p = world.params
    agent = world.agents[agent_id]
    if rel is None or manhattan(rel) > p.clear_range:
        agent.charge_target, agent.charge_steps = None, 0
        return A.failed("target")
    target = add(agent.pos, rel)
    if not world.in_bounds(target):
        agent.charge_target, agent.charge_steps = None, 0
        return A.failed("target")
    if agent.energy < p.clear_cost:
        agent.charge_target, agent.charge_steps = None, 0
        return A.failed("insufficient_energy")
    if agent.charge_target == target:
        agent.charge_steps += 1
    else:
        agent.charge_target, agent.charge_steps = target, 1
    if agent.charge_steps < p.clear_charge_steps:
        return A.CHARGING
    agent.energy -= p.clear_cost
    agent.charge_target, agent.charge_steps = None, 0
    _clear_cell(world, target)
    return A.CLEARED


def _resolve_attach(world: WorldState, agent_id: int, d: str | None) -> str:
    if d not in DIRS:
        return A.failed("parameter")
    agent = world.agents[agent_id]
    target = add(agent.pos, DIRS[d])
    bid = world.block_at.get(target)
    if bid is None:
        return A.failed("target")
    me, bk = ("a", agent_id), ("b", bid)
    if bk in world.edges.get(me, ()):
        return A.failed("target")
    comp = world.component(bk)
    if me not in comp and any(k[0] == "a" for k in comp):
        return A.failed("blocked")
    world.link(me, bk)
    return A.SUCCESS


def _resolve_detach(world: WorldState, agent_id: int, d: str | None) -> str:
    if d not in DIRS:
        return A.failed("parameter")
    agent = world.agents[agent_id]
    bid = world.block_at.get(add(agent.pos, DIRS[d]))
    me = ("a", agent_id)
    if bid is None or ("b", bid) not in world.edges.get(me, ()):
        return A.failed("target")
    world.unlink(me, ("b", bid))
    return A.SUCCESS


def _resolve_request(world: WorldState, agent_id: int, d: str | None) -> str:
    if d not in DIRS:
        return A.failed("parameter")
    target = add(world.agents[agent_id].pos, DIRS[d])
    btype = world.dispensers.get(target)
    if btype is None:
        return A.failed("target")
    if target in world.block_at or target in world.agent_at:
        return A.failed("blocked")
    world.add_block(target, btype)
    world.created += 1
    return A.SUCCESS


def _connect_ok(world: WorldState, a_id: int, act: Action, b_id: int, other: Action) -> bool:
    a, b = world.agents[a_id], world.agents[b_id]
    if a.team != b.team or a_id == b_id:
        return False
    if None in (act.rel, act.partner_rel, other.rel, other.partner_rel) or other.partner != a_id:
        return False
    a_block, a_sees_b = add(a.pos, act.rel), add(a.pos, act.partner_rel)
    b_block, b_sees_a = add(b.pos, other.rel), add(b.pos, other.partner_rel)
    if a_block != b_sees_a or b_block != a_sees_b or manhattan(a_block, b_block) != 1:
        return False
    ka, kb = world.block_at.get(a_block), world.block_at.get(b_block)
    if ka is None or kb is None:
        return False
    if ("b", ka) not in world.component(("a", a_id)) or ("b", kb) not in world.component(("a", b_id)):
        return False
    world.link(("b", ka), ("b", kb))
    return True


# -- task / event generation ----------------------------------------------


def generate_task(world: WorldState) -> Task | None:
    tp = world.task_params
    rng = world.rng
    k = rng.choice(tp.sizes)
    layouts = enumerate_layouts(k)
    cells = sorted(rng.choice(layouts))
    types = world.params.block_types
    available = sorted(set(world.dispensers.values())) or list(types)
    shape = TaskShape.of((c, rng.choice(available)) for c in cells)
    name = f"task{world.next_task_id}"
    world.next_task_id += 1
    return Task(name, tp.reward_per_block * len(shape), world.step + tp.deadline, shape)


def _spawn(world: WorldState, events: list[dict]) -> None:
    tp, p, rng = world.task_params, world.params, world.rng
    if len(world.tasks) < tp.max_active and tp.spawn_probability > 0:
        if rng.random() < tp.spawn_probability:
            task = generate_task(world)
            world.tasks[task.name] = task
            events.append({"type": "task_spawn", "step": world.step - 1, "task": task.to_json()})
    if p.clear_event_rate > 0 and rng.random() < p.clear_event_rate:
        center = (rng.randrange(world.width), rng.randrange(world.height))
        ev = ClearEvent(center, p.clear_event_radius, world.step + p.clear_event_warn)
        world.clear_events.append(ev)
        events.append({"type": "clear_event", "step": world.step - 1, "center": list(center),
                       "radius": ev.radius, "detonation": ev.detonation_step})


def _detonate(world: WorldState, events: list[dict]) -> None:
    due = [e for e in world.clear_events if e.detonation_step <= world.step]
    if not due:
        return
    world.clear_events = [e for e in world.clear_events if e.detonation_step > world.step]
    for ev in due:
        destroyed = 0
        area = [c for c in ev.cells() if world.in_bounds(c)]
        for c in area:
            destroyed += _clear_cell(world, c)
        if world.params.obstacle_regrowth:
            for c in area:
                if world.is_free(c) and c not in world.dispensers and c not in world.goals:
                    if world.rng.random() < world.params.obstacle_density:
                        world.obstacles.add(c)
        events.append({"type": "detonation", "step": world.step - 1, "center": list(ev.center),
                       "destroyed": destroyed})


# -- percepts ----------------------------------------------------------------


def gen_percept(world: WorldState, agent_id: int) -> Percept:
    agent = world.agents[agent_id]
    r = world.params.vision_radius
    things: list[Thing] = []
    markers: dict[Coord, int] = {}
    for ev in world.clear_events:
        if manhattan(ev.center, agent.pos) > r + ev.radius:
            continue
        left = ev.detonation_step - world.step
        for c in ev.cells():
            if world.in_bounds(c) and manhattan(c, agent.pos) <= r:
                markers[c] = min(markers.get(c, left), left)
    for other in world.agents.values():
        if other.charge_target is not None and manhattan(other.charge_target, agent.pos) <= r:
            left = world.params.clear_charge_steps - other.charge_steps
            c = other.charge_target
            markers[c] = min(markers.get(c, left), left)
    px, py = agent.pos
    for o in diamond(r):
        c = (px + o[0], py + o[1])
        if not world.in_bounds(c):
            continue
        if c in world.obstacles:
            things.append(Thing(o, "obstacle"))
        if c in world.goals:
            things.append(Thing(o, "goal"))
        if c in world.dispensers:
            things.append(Thing(o, "dispenser", world.dispensers[c]))
        bid = world.block_at.get(c)
        if bid is not None:
            things.append(Thing(o, "block", world.blocks[bid].type))
        aid = world.agent_at.get(c)
        if aid is not None and aid != agent_id:
            things.append(Thing(o, "friend" if world.agents[aid].team == agent.team else "foe"))
        if c in markers:
            things.append(Thing(o, "marker", markers[c]))
    comp = world.component(("a", agent_id))
    attached = tuple(sorted(sub(world.pos_of(k), agent.pos) for k in comp if k != ("a", agent_id)))
    tasks = tuple(sorted(world.tasks.values(), key=lambda t: t.name))
    return Percept(world.step, agent.energy, agent.last_action, agent.last_result, r,
                   tuple(things), attached, tasks, world.scores.get(agent.team, 0))


# -- the step ------------------------------------------------------------------


def step_world(
    world: WorldState, actions: dict[int, Action]
) -> tuple[WorldState, dict[int, Percept], list[dict]]:
    """Resolve one action per agent, advance the clock and return fresh percepts.

    Agents without an entry in ``actions`` skip. The world is mutated in place
    and returned for convenience.
    """
    events: list[dict] = []
    results: dict[int, str] = {}
    blocked_by: dict[int, list[int]] = {}
    step = world.step
    order = sorted(world.agents)
    chosen = {aid: actions.get(aid, A.SKIP) for aid in order}
    for aid in order:
        act = chosen[aid]
        if aid in results:
            continue
        if act.kind != "clear":
            world.agents[aid].charge_target = None
            world.agents[aid].charge_steps = 0
        if act.kind == "skip":
            res = A.SUCCESS
        elif act.kind == "move":
            res = move_component(world, aid, act.dir)
        elif act.kind == "rotate":
            res = rotate_component(world, aid, act.dir)
        elif act.kind == "attach":
            res = _resolve_attach(world, aid, act.dir)
        elif act.kind == "detach":
            res = _resolve_detach(world, aid, act.dir)
        elif act.kind == "request":
            res = _resolve_request(world, aid, act.dir)
        elif act.kind == "clear":
            res = resolve_clear(world, aid, act.rel)
        elif act.kind == "submit":
            res = resolve_submit(world, aid, act.task)
            if res == A.SUCCESS:
                task = world.tasks[act.task]
                events.append({"type": "submit", "step": step, "agent": aid,
                               "team": world.agents[aid].team, "task": task.name,
                               "reward": task.reward})
        elif act.kind == "connect":
            partner = act.partner
            other = chosen.get(partner) if partner in world.agents else None
            if other is None or other.kind != "connect" or partner in results:
                res = A.failed("partner")
            elif _connect_ok(world, aid, act, partner, other):
                res = A.SUCCESS
                results[partner] = A.SUCCESS
                world.agents[partner].charge_target = None
                world.agents[partner].charge_steps = 0
            else:
                res = A.failed("target")
                results[partner] = A.failed("target")
        else:
            res = A.failed("unknown_action")
        results[aid] = res
        if res == A.failed("path_blocked") and act.kind in ("move", "rotate"):
            blocked_by[aid] = _blockers(world, aid, act)
    for aid in order:
        agent = world.agents[aid]
        agent.last_action = chosen[aid]
        agent.last_result = results[aid]
        ev = {"type": "action", "step": step, "agent": aid, "team": agent.team,
              "action": chosen[aid].to_json(), "result": results[aid]}
        if aid in blocked_by:
            ev["blocked_by"] = blocked_by[aid]
        events.append(ev)

    world.step += 1
    p = world.params
    for agent in world.agents.values():
        agent.energy = min(p.max_energy, agent.energy + p.energy_recharge)
    _detonate(world, events)
    for name in sorted(world.tasks):
        if world.tasks[name].deadline < world.step:
            del world.tasks[name]
            world.expired_tasks.add(name)
            events.append({"type": "task_expire", "step": step, "task": name})
    _spawn(world, events)
    percepts = {aid: gen_percept(world, aid) for aid in order}
    return world, percepts, events


def all_percepts(world: WorldState) -> dict[int, Percept]:
    return {aid: gen_percept(world, aid) for aid in sorted(world.agents)}


def check_invariants(world: WorldState) -> list[str]:
    """Structural invariants; returns human-readable violations (empty when sound)."""
    problems = []
    if len(world.agent_at) != len(world.agents):
        problems.append("agent index size mismatch")
    if len(world.block_at) != len(world.blocks):
        problems.append("block index size mismatch")
    for a in world.agents.values():
        if world.agent_at.get(a.pos) != a.id:
            problems.append(f"agent {a.id} not indexed at {a.pos}")
        if a.pos in world.block_at:
            problems.append(f"agent {a.id} shares a cell with a block")
        if not world.in_bounds(a.pos) or a.pos in world.obstacles:
            problems.append(f"agent {a.id} on illegal cell")
        if a.energy > world.params.max_energy or a.energy < 0:
            problems.append(f"agent {a.id} energy out of range")
    for b in world.blocks.values():
        if world.block_at.get(b.pos) != b.id:
            problems.append(f"block {b.id} not indexed")
        if b.pos in world.obstacles:
            problems.append(f"block {b.id} on obstacle")
    for k, ns in world.edges.items():
        for n in ns:
            if manhattan(world.pos_of(k), world.pos_of(n)) != 1:
                problems.append(f"edge {k}-{n} not adjacent")
    expected = world.created - world.destroyed_by_clear - world.consumed_by_submit
    if world.initial_blocks + expected != len(world.blocks):
        problems.append("block conservation violated")
    return problems
