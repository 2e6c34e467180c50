
from hypothesis import given, strategies as st

from mapcsim.beliefs import GroupMap
from mapcsim.config import MatchConfig, TaskParams, TeamConfig, WorldParams
from mapcsim.sync import SightingReport, SyncRegistry, find_unique_pairs, merge_groups, sync_step
from mapcsim.world import all_percepts

from conftest import make_world
from helpers import audited_match


def R(obs, x, y):
    return SightingReport(obs, (x, y))


def test_minimal_pair():
    assert find_unique_pairs([R(1, 3, 0), R(2, -3, 0)]) == [(1, 2, (3, 0))]


def test_shared_offset_is_ambiguous():
    reports = [R(1, 2, 2), R(3, 2, 2), R(2, -2, -2)]
    assert find_unique_pairs(reports) == []


def test_unmatched_sighting_is_dropped():
    assert find_unique_pairs([R(1, 1, 0)]) == []


def test_same_group_pairs_skipped():
    reports = [R(1, 3, 0), R(2, -3, 0)]
    assert find_unique_pairs(reports, {1: 7, 2: 7}) == []


@given(st.lists(st.tuples(st.integers(1, 5), st.integers(-3, 3), st.integers(-3, 3)), max_size=12))
def test_pairs_are_mutual_and_unique(raw):
    reports = [R(a, x, y) for a, x, y in raw]
    pairs = find_unique_pairs(reports)
    observers = {}
    for r in reports:
        observers.setdefault(r.offset, set()).add(r.observer)
    for a, b, d in pairs:
        assert a < b
        assert observers[d] == {a}
        assert observers[(-d[0], -d[1])] == {b}
    # swapping the roles of the two observers never changes the answer
    mirrored = [R(r.observer, -r.offset[0], -r.offset[1]) for r in reports]
    assert sorted((a, b, (-d[0], -d[1])) for a, b, d in find_unique_pairs(mirrored)) == sorted(pairs)


def test_shift_arithmetic():
    reg = SyncRegistry()
    reg.groups = {1: GroupMap(1, members={1: (5, 5)}), 2: GroupMap(2, members={2: (0, 0)})}
    reg.agent_to_group = {1: 1, 2: 2}
    reg, ev = merge_groups(reg, 1, 2, (1, 0))
    assert ev["shift"] == [6, 5]
    assert reg.group_of(2).members[2] == (6, 5)
    assert reg.merges == 1


def test_mastergroup_keeps_its_frame():
    reg = SyncRegistry()
    reg.groups = {1: GroupMap(1, members={1: (5, 5)}), 2: GroupMap(2, members={2: (0, 0)})}
    reg.agent_to_group = {1: 1, 2: 2}
    reg.set_master(2)
    reg, ev = merge_groups(reg, 1, 2, (1, 0))
    assert set(reg.groups) == {2}
    assert ev["shift"] == [-6, -5]
    assert reg.groups[2].members == {2: (0, 0), 1: (-1, 0)}


def test_merge_of_same_group_rejected():
    reg = SyncRegistry.for_agents([1])
    try:
        merge_groups(reg, 1, 1, (1, 0))
    except ValueError:
        return
    raise AssertionError("expected ValueError")


def test_scripted_encounter_four_agents():
    # two pairs that see each other, plus a far pair: 1-2 and 3-4 merge
    w = make_world(20, 20, agents=[(1, "A", (2, 2)), (2, "A", (5, 2)), (3, "A", (14, 14)), (4, "A", (14, 17))])
    reg = SyncRegistry.for_agents([1, 2, 3, 4])
    reg, n, _ = sync_step(reg, all_percepts(w))
    assert n == 2
    assert len(reg.groups) == 2
    for gm in reg.groups.values():
        offs = {(w.agents[a].pos[0] - p[0], w.agents[a].pos[1] - p[1]) for a, p in gm.members.items()}
        assert len(offs) == 1
    reg, n, _ = sync_step(reg, all_percepts(w))
    assert n == 0


def test_evenly_spaced_row_is_ambiguous():
    # 1 and 2 both report a friend at (3, 0), so neither pair can be trusted
    w = make_world(20, 20, agents=[(1, "A", (2, 5)), (2, "A", (5, 5)), (3, "A", (8, 5))])
    reg = SyncRegistry.for_agents([1, 2, 3])
    reg, n, _ = sync_step(reg, all_percepts(w))
    assert n == 0 and len(reg.groups) == 3


def test_foes_never_produce_merges():
    w = make_world(20, 20, agents=[(1, "A", (2, 5)), (2, "B", (5, 5))])
    reg = SyncRegistry.for_agents([1])
    reg, n, _ = sync_step(reg, {1: all_percepts(w)[1]})
    assert n == 0


def _walk_config(seed, engine="desouches", steps=200):
    return MatchConfig(
        world=WorldParams(width=40, height=40, obstacle_density=0.15),
        tasks=TaskParams(spawn_probability=0.0, max_active=0),
        teams=[TeamConfig("A", engine, 6)], steps=steps, seed=seed)


def test_merges_sound_against_ground_truth():
    for seed in range(3):
        result, audit = audited_match(_walk_config(seed))
        assert audit.violations == []
        counts = [r["groups"]["A"] for r in result.records if r["type"] == "state"]
        desyncs = sum(r["type"] == "desync" for r in result.records)
        if desyncs == 0:
            assert all(a >= b for a, b in zip(counts, counts[1:]))
            assert audit.merges <= 5


def test_merges_sound_with_fitbut_dragging():
    cfg = MatchConfig(world=WorldParams(width=25, height=25, block_types=["b0"]),
                      tasks=TaskParams(sizes=[2]), teams=[TeamConfig("A", "fitbut", 4)],
                      steps=150, seed=4)
    _, audit = audited_match(cfg)
    assert audit.violations == []
