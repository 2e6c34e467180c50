"""Match orchestration, JSON-lines event log, summaries and replay checks.

Per step: every team reads its percepts and proposes actions, the world
resolves them, and the log receives the action records, world and team
events, and a state hash. Wall-clock timings are kept out of the log so two
runs with the same seed write identical bytes.
"""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

from .actions import Action
from .baseline import RandomTeam
from .config import ConfigError, MatchConfig, TeamConfig
from .desouches import DeSouchesTeam, ScenarioConfig
from .fitbut import FitButTeam, ReasonerConfig
from .world import WorldState, all_percepts, step_world
from .worldgen import generate_world

LOG_VERSION = 1


@dataclass
class MatchSummary:
    seed: int
    steps: int
    scores: dict[str, int]
    tasks_completed: dict[str, int]
    tasks_attempted: dict[str, int]
    full_sync_step: dict[str, int | None]
    group_timeline: dict[str, list[list[int]]]
    action_counts: dict[str, dict[str, int]]
    wallclock_ms: dict[str, float] = field(default_factory=dict)

    def to_dict(self, with_timing: bool = True) -> dict[str, Any]:
        d = asdict(self)
        if not with_timing:
            d.pop("wallclock_ms")
        return d


@dataclass
class MatchResult:
    summary: MatchSummary
    log_path: Path | None
    records: list[dict]
    world: WorldState
    teams: dict[str, Any]


def make_team(team: TeamConfig, agent_ids: list[int], config: MatchConfig):
    base = {"budget_mode": config.budget_mode, "step_budget_ms": config.step_budget_ms,
            "step_budget_ops": config.step_budget_ops}
    if team.engine == "fitbut":
        reasoner = ReasonerConfig.from_dict({**base, **team.reasoner})
        return FitButTeam(team.name, agent_ids, config.world, reasoner, config.seed, config.verbosity)
    if team.engine == "desouches":
        scen = ScenarioConfig.from_dict(team.reasoner)
        return DeSouchesTeam(team.name, agent_ids, config.world, scen, config.seed, config.verbosity)
    if team.engine == "random":
        return RandomTeam(team.name, agent_ids, config.seed)
    raise ConfigError(f"unknown engine {team.engine!r}")


def _group_count(team) -> int:
    reg = getattr(team, "registry", None)
    if reg is not None:
        return len(reg.groups)
    return len(team.agent_ids)


def _dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def run_match(
    config: MatchConfig,
    out_dir: str | Path | None = None,
    *,
    on_step: Callable[[WorldState, dict, list[dict]], None] | None = None,
    log_name: str | None = None,
) -> MatchResult:
    """Play one match. With ``out_dir`` the log and summary are written there."""
    world = generate_world(config)
    teams = {}
    for t in config.teams:
        ids = sorted(aid for aid, a in world.agents.items() if a.team == t.name)
        teams[t.name] = make_team(t, ids, config)
    records: list[dict] = [{"type": "config", "version": LOG_VERSION, "config": config.to_dict()}]
    handle = None
    log_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        log_path = out / (log_name or f"match_{config.seed}.jsonl")
        handle = log_path.open("w", encoding="utf-8")
        handle.write(_dumps(records[0]) + "\n")
    timings = []
    percepts = all_percepts(world)
    try:
        for _ in range(config.steps):
            step = world.step
            started = time.perf_counter()
            actions: dict[int, Action] = {}
            team_events: list[dict] = []
            for name in sorted(teams):
                team = teams[name]
                mine = {aid: percepts[aid] for aid in team.agent_ids}
                actions.update(team.decide(mine))
                team_events.extend(team.drain_events())
            groups = {aid: teams[world.agents[aid].team].group_id(aid) for aid in world.agents}
            counts = {name: _group_count(teams[name]) for name in sorted(teams)}
            timings.append((time.perf_counter() - started) * 1000.0)
            world, percepts, events = step_world(world, actions)
            step_records = []
            for ev in events:
                if ev["type"] == "action":
                    ev["group"] = groups[ev["agent"]]
                step_records.append(ev)
            step_records.extend(team_events)
            step_records.append({"type": "state", "step": step, "hash": world.state_hash(),
                                 "groups": counts, "scores": dict(sorted(world.scores.items()))})
            if handle is not None:
                handle.write("".join(_dumps(r) + "\n" for r in step_records))
            records.extend(step_records)
            if on_step is not None:
                on_step(world, teams, step_records)
    finally:
        if handle is not None:
            handle.close()
    summary = summarize_records(records)
    if timings:
        summary.wallclock_ms = {"mean": sum(timings) / len(timings), "max": max(timings)}
    if out_dir is not None:
        summary_path = Path(out_dir) / (log_path.stem + ".summary.json")
        summary_path.write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
    return MatchResult(summary, log_path, records, world, teams)


# -- reading logs ----------------------------------------------------------------


def read_log(path: str | Path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def config_of(records: list[dict]) -> MatchConfig:
    if not records or records[0].get("type") != "config":
        raise ConfigError("log does not start with a config record", 1)
    return MatchConfig.from_dict(records[0]["config"])


def summarize_records(records: Iterable[dict]) -> MatchSummary:
    records = list(records)
    cfg = config_of(records)
    names = sorted(t.name for t in cfg.teams)
    scores = {n: 0 for n in names}
    completed = Counter()
    attempted = Counter()
    timeline: dict[str, list[list[int]]] = {n: [] for n in names}
    full_sync: dict[str, int | None] = {n: None for n in names}
    counts: dict[str, Counter] = {n: Counter() for n in names}
    steps = 0
    for r in records:
        kind = r["type"]
        if kind == "action":
            team = r["team"]
            counts[team][f"{r['action']['kind']}:{r['result']}"] += 1
            if r["action"]["kind"] == "submit":
                attempted[team] += 1
        elif kind == "submit":
            completed[r["team"]] += 1
        elif kind == "state":
            steps = r["step"] + 1
            scores.update(r["scores"])
            for n, g in r["groups"].items():
                if not timeline[n] or timeline[n][-1][1] != g:
                    timeline[n].append([r["step"], g])
                if g == 1 and full_sync[n] is None:
                    full_sync[n] = r["step"]
    return MatchSummary(
        seed=cfg.seed, steps=steps, scores=scores,
        tasks_completed={n: completed[n] for n in names},
        tasks_attempted={n: attempted[n] for n in names},
        full_sync_step=full_sync, group_timeline=timeline,
        action_counts={n: dict(sorted(counts[n].items())) for n in names},
    )


def summarize_log(path: str | Path) -> MatchSummary:
    return summarize_records(read_log(path))


@dataclass
class ReplayOutcome:
    ok: bool
    step: int | None = None
    reason: str = ""


def replay_records(records: list[dict]) -> ReplayOutcome:
    """Re-simulate the logged actions from the logged config and compare
    every result and state hash."""
    cfg = config_of(records)
    world = generate_world(cfg)
    by_step: dict[int, list[dict]] = {}
    for r in records[1:]:
        by_step.setdefault(r["step"], []).append(r)
    for step in sorted(by_step):
        recs = by_step[step]
        if world.step != step:
            return ReplayOutcome(False, step, "step sequence broken")
        try:
            acts = {r["agent"]: Action.from_json(r["action"]) for r in recs if r["type"] == "action"}
        except (KeyError, TypeError, ValueError):
            return ReplayOutcome(False, step, "malformed action record")
        logged = {r["agent"]: r["result"] for r in recs if r["type"] == "action"}
        world, _, events = step_world(world, acts)
        got = {e["agent"]: e["result"] for e in events if e["type"] == "action"}
        if got != logged:
            return ReplayOutcome(False, step, "action results differ")
        state = [r for r in recs if r["type"] == "state"]
        if not state or state[0]["hash"] != world.state_hash():
            return ReplayOutcome(False, step, "state hash differs")
    return ReplayOutcome(True)


def replay_verify(path: str | Path) -> ReplayOutcome:
    return replay_records(read_log(path))


def friendly_collisions(records: Iterable[dict]) -> list[dict]:
    """Blocked moves whose blocker is a teammate from the mover's own group."""
    by_step: dict[int, dict[int, dict]] = {}
    blocked = []
    for r in records:
        if r["type"] == "action":
            by_step.setdefault(r["step"], {})[r["agent"]] = r
            if r.get("blocked_by"):
                blocked.append(r)
    out = []
    for r in blocked:
        peers = by_step[r["step"]]
        for b in r["blocked_by"]:
            other = peers.get(b)
            if other and other["team"] == r["team"] and other["group"] == r["group"]:
                out.append(r)
                break
    return out
