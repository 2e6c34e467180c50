import itertools
import random

from mapcsim import actions as A
from mapcsim.geometry import DIRS, add, sub
from mapcsim.reservation import ReservationMap, register_standing, reserve_action, reset_reservations
from mapcsim.world import step_world

from conftest import attach_block, make_world
from helpers import synced_core


def test_request_and_disjoint_move_both_approved():
    res = ReservationMap()
    register_standing(res, [7], [(2, 2)])
    register_standing(res, [3], [(5, 5)])
    assert reserve_action(res, 7, A.request("s"), [(2, 2)])
    assert reserve_action(res, 3, A.move("e"), [(5, 5)])


def test_same_destination_first_come_wins():
    res = ReservationMap()
    register_standing(res, [1], [(0, 0)])
    register_standing(res, [2], [(2, 0)])
    assert reserve_action(res, 1, A.move("e"), [(0, 0)])
    d = reserve_action(res, 2, A.move("w"), [(2, 0)])
    assert not d and d.conflict == 1


def test_move_into_vacating_cell_rejected():
    # B may fail and stay, so A cannot take B's current cell
    res = ReservationMap()
    register_standing(res, [1], [(0, 0)])
    register_standing(res, [2], [(1, 0)])
    assert reserve_action(res, 2, A.move("e"), [(1, 0)])
    assert not reserve_action(res, 1, A.move("e"), [(0, 0)])


def test_one_spawn_per_dispenser_cell():
    res = ReservationMap()
    register_standing(res, [1], [(0, 0)])
    register_standing(res, [2], [(2, 0)])
    assert reserve_action(res, 1, A.request("e"), [(0, 0)])
    assert not reserve_action(res, 2, A.request("w"), [(2, 0)])


def test_reset_clears_and_is_idempotent():
    res = ReservationMap()
    register_standing(res, [1], [(0, 0)])
    register_standing(res, [2], [(2, 0)])
    reserve_action(res, 1, A.move("e"), [(0, 0)])
    assert not reserve_action(res, 2, A.move("w"), [(2, 0)])
    reset_reservations(res, 1)
    reset_reservations(res, 1)
    assert res.cell_claims == {} and res.acted == {}
    assert reserve_action(res, 2, A.move("w"), [(2, 0)])


def test_one_action_per_component():
    res = ReservationMap()
    register_standing(res, [1, 2], [(0, 0), (1, 0), (2, 0)])
    assert reserve_action(res, 1, A.move("n"), [(0, 0), (1, 0), (2, 0)])
    assert not reserve_action(res, 2, A.move("s"), [(2, 0), (1, 0), (0, 0)])
    assert reserve_action(res, 2, A.SKIP, [(2, 0)])


def test_rejection_leaves_no_trace():
    res = ReservationMap()
    register_standing(res, [1], [(0, 0)])
    register_standing(res, [2], [(1, 1)])
    assert reserve_action(res, 1, A.move("e"), [(0, 0)])
    before = dict(res.cell_claims)
    assert not reserve_action(res, 2, A.move("n"), [(1, 1)])
    assert res.cell_claims == before


# -- randomized safety rounds against the world --------------------------------------


def _outcome_cells(world, actor, act, ok):
    """Cells a component occupies after ``act`` resolves one way or the other."""
    comp = world.component(("a", actor))
    cells = {world.pos_of(k) for k in comp}
    new_block = set()
    if ok:
        pivot = world.agents[actor].pos
        if act.kind == "move":
            cells = {add(c, DIRS[act.dir]) for c in cells}
        elif act.kind == "rotate":
            turn = (lambda x, y: (-y, x)) if act.dir == "cw" else (lambda x, y: (y, -x))
            cells = {add(pivot, turn(*sub(c, pivot))) for c in cells}
        elif act.kind == "request":
            new_block = {add(pivot, DIRS[act.dir])}
    return cells, new_block


def _random_round(seed):
    rng = random.Random(seed)
    size = 7
    n = rng.randint(2, 6)
    cells = [(x, y) for y in range(size) for x in range(size)]
    rng.shuffle(cells)
    agents = [(i + 1, "A", cells.pop()) for i in range(n)]
    obstacles = {cells.pop() for _ in range(rng.randint(0, 6))}
    dispensers = {cells.pop(): "b0" for _ in range(rng.randint(0, 3))}
    w = make_world(size, size, agents=agents, obstacles=obstacles, dispensers=dispensers, seed=seed)
    free = lambda c: w.in_bounds(c) and w.is_free(c) and c not in dispensers
    for aid, _, pos in agents:
        if rng.random() < 0.5:
            d = rng.choice(list(DIRS.values()))
            c = add(pos, d)
            if free(c):
                attach_block(w, aid, c)
    # occasionally fuse two agents through their blocks
    if rng.random() < 0.3:
        for (a, _, _), (b, _, _) in itertools.combinations(agents, 2):
            ka, kb = ("a", a), ("a", b)
            ca = [k for k in w.component(ka) if k[0] == "b"]
            cb = [k for k in w.component(kb) if k[0] == "b"]
            pair = next(((x, y) for x in ca for y in cb
                         if sum(abs(p - q) for p, q in zip(w.pos_of(x), w.pos_of(y))) == 1), None)
            if pair and len({k for k in w.component(ka) if k[0] == "a"}) == 1:
                w.link(*pair)
                break
    return w, rng


def _random_action(rng):
    kind = rng.choice(["move", "move", "move", "rotate", "request", "attach", "skip", "clear"])
    d = rng.choice("nesw")
    if kind == "move":
        return A.move(d)
    if kind == "rotate":
        return A.rotate(rng.choice(["cw", "ccw"]))
    if kind == "request":
        return A.request(d)
    if kind == "attach":
        return A.attach(d)
    if kind == "clear":
        return A.clear(rng.choice([(1, 0), (0, 2), (-1, -1)]))
    return A.SKIP


def reservation_round(seed):
    """One randomized proposal round; returns a list of safety violations."""
    world, rng = _random_round(seed)
    core, views = synced_core(world)
    res = core.reservation_maps(views, 0)[core.registry.agent_to_group[min(views)]]
    order = sorted(views)
    rng.shuffle(order)
    approved = {}
    for aid in order:
        act = _random_action(rng)
        if core.propose(res, views[aid], act):
            approved[aid] = act
    problems = []
    actors = {aid: act for aid, act in approved.items() if act.kind != "skip"}
    comps = {}
    for aid in world.agents:
        comps.setdefault(min(k[1] for k in world.component(("a", aid)) if k[0] == "a"), aid)
    acting_comp = {min(k[1] for k in world.component(("a", a)) if k[0] == "a"): a for a in actors}
    if len(acting_comp) != len(actors):
        problems.append("two actions in one component")
    keys = sorted(acting_comp)
    for outcome in itertools.product([True, False], repeat=len(keys)):
        chosen = dict(zip(keys, outcome))
        taken: dict = {}
        for comp, rep in comps.items():
            actor = acting_comp.get(comp)
            if actor is None:
                body, spawned = _outcome_cells(world, rep, A.SKIP, False)
            else:
                body, spawned = _outcome_cells(world, actor, actors[actor], chosen[comp])
            for c in body | spawned:
                if c in taken and taken[c] != comp:
                    problems.append(("overlap", c, outcome))
                taken[c] = comp
    acts = {aid: approved.get(aid, A.SKIP) for aid in world.agents}
    _, _, events = step_world(world, acts)
    for ev in events:
        if ev["type"] == "action" and ev.get("blocked_by"):
            problems.append(("friendly block", ev))
    return problems, len(approved)


def test_randomized_rounds_are_safe():
    total = 0
    for seed in range(300):
        problems, n = reservation_round(seed)
        assert problems == [], (seed, problems)
        total += n
    assert total > 300
