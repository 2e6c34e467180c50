import json

import pytest

from mapcsim.cli import main
from mapcsim.config import MatchConfig, TaskParams, TeamConfig, WorldParams
from mapcsim.runner import read_log, replay_records, replay_verify, run_match, summarize_log

SMALL = MatchConfig(world=WorldParams(width=20, height=20, block_types=["b0"]),
                    tasks=TaskParams(sizes=[1, 2]),
                    teams=[TeamConfig("A", "fitbut", 3), TeamConfig("B", "desouches", 3),
                           TeamConfig("C", "random", 2)],
                    steps=60, seed=11)

RECORD_KEYS = {
    "config": {"version", "config"},
    "action": {"step", "agent", "team", "action", "result", "group"},
    "state": {"step", "hash", "groups", "scores"},
    "sync": {"step", "team", "agents", "shift", "group", "absorbed"},
}


@pytest.fixture(scope="module")
def played(tmp_path_factory):
    out = tmp_path_factory.mktemp("logs")
    return run_match(SMALL, out)


def test_same_seed_byte_identical(played, tmp_path):
    again = run_match(SMALL, tmp_path)
    assert again.log_path.read_bytes() == played.log_path.read_bytes()


def test_log_schema(played):
    records = read_log(played.log_path)
    assert records[0]["type"] == "config"
    steps = [r["step"] for r in records if r["type"] == "state"]
    assert steps == list(range(SMALL.steps))
    for r in records:
        assert "type" in r
        assert RECORD_KEYS.get(r["type"], set()) <= set(r)
        if r["type"] != "config":
            assert isinstance(r["step"], int)


def test_replay_ok(played):
    assert replay_verify(played.log_path).ok


def test_mutated_action_diverges(played):
    records = read_log(played.log_path)
    idx = next(i for i, r in enumerate(records)
               if r["type"] == "action" and r["step"] == 20 and r["action"]["kind"] == "move")
    rec = dict(records[idx])
    turn = {"n": "s", "s": "n", "e": "w", "w": "e"}
    rec["action"] = dict(rec["action"], dir=turn[rec["action"]["dir"]])
    records[idx] = rec
    out = replay_records(records)
    assert not out.ok and out.step == 20


def test_summary_from_log_matches(played):
    assert summarize_log(played.log_path).to_dict(with_timing=False) == \
        played.summary.to_dict(with_timing=False)
    assert played.summary.scores == dict(played.world.scores)


def test_full_sync_metric_matches_events(played):
    records = played.records
    for team, first in played.summary.full_sync_step.items():
        counts = [(r["step"], r["groups"][team]) for r in records if r["type"] == "state"]
        expected = next((s for s, g in counts if g == 1), None)
        assert first == expected
    sync_steps = [r["step"] for r in records if r["type"] == "sync" and r["team"] == "A"]
    if played.summary.full_sync_step["A"] is not None and sync_steps:
        assert played.summary.full_sync_step["A"] == max(
            s for s in sync_steps if s <= played.summary.full_sync_step["A"])


def test_no_tasks_no_score():
    cfg = SMALL.replace(tasks=TaskParams(spawn_probability=0.0, max_active=0), steps=30)
    result = run_match(cfg)
    assert set(result.summary.scores.values()) == {0}


def test_cli_round_trip(tmp_path, capsys):
    cfg_path = tmp_path / "match.json"
    cfg_path.write_text(json.dumps(SMALL.to_dict()))
    assert main(["run", "--config", str(cfg_path), "--seed", "4", "--steps", "15",
                 "--out", str(tmp_path)]) == 0
    log = tmp_path / "match_4.jsonl"
    assert log.exists() and (tmp_path / "match_4.summary.json").exists()
    assert main(["replay", "--log", str(log)]) == 0
    assert main(["summarize", "--log", str(log)]) == 0
    lines = log.read_text().splitlines()
    for i, line in enumerate(lines):
        rec = json.loads(line)
        if rec["type"] == "action" and rec["step"] == 5:
            rec["result"] = "success" if rec["result"] != "success" else "failed_path_blocked"
            lines[i] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
            break
    log.write_text("\n".join(lines) + "\n")
    assert main(["replay", "--log", str(log)]) == 3
    assert "divergence at step 5" in capsys.readouterr().out


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "steps": 10,\n  "world": {"width": -3}\n}\n')
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "line 3" in err
    bad.write_text('{"teams": [{"name": "A", "engine": "magic", "agents": 2}]}')
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
