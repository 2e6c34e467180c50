"""Match configuration: dataclasses, defaults and JSON loading with validation."""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

ENGINES = ("fitbut", "desouches", "random")


class ConfigError(ValueError):
    """Invalid match configuration; ``line`` points into the source JSON when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class WorldParams:
    width: int = 40
    height: int = 40
    topology: str = "bounded"
    obstacle_density: float = 0.15
    smoothing_passes: int = 1
    block_types: list[str] = field(default_factory=lambda: ["b0", "b1"])
    dispensers_per_type: int = 2
    goal_clusters: int = 2
    goal_cluster_size: int = 6
    spawn: str = "random"
    vision_radius: int = 5
    max_energy: int = 300
    energy_recharge: int = 2
    clear_cost: int = 30
    clear_charge_steps: int = 3
    clear_range: int = 2
    clear_event_radius: int = 3
    clear_event_warn: int = 5
    clear_event_rate: float = 0.01
    obstacle_regrowth: bool = False


@dataclass
class TaskParams:
    sizes: list[int] = field(default_factory=lambda: [1, 2, 3])
    spawn_probability: float = 0.1
    max_active: int = 3
    deadline: int = 80
    reward_per_block: int = 10


@dataclass
class TeamConfig:
    name: str
    engine: str
    agents: int
    reasoner: dict[str, Any] = field(default_factory=dict)


@dataclass
class MatchConfig:
    world: WorldParams = field(default_factory=WorldParams)
    tasks: TaskParams = field(default_factory=TaskParams)
    teams: list[TeamConfig] = field(
        default_factory=lambda: [TeamConfig("A", "fitbut", 4), TeamConfig("B", "random", 4)]
    )
    steps: int = 300
    seed: int = 0
    verbosity: int = 0
    budget_mode: str = "ops"
    step_budget_ms: float = 500.0
    step_budget_ops: int = 20000

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any], source: str | None = None) -> "MatchConfig":
        return _build(data, source)

    def replace(self, **changes) -> "MatchConfig":
        return dataclasses.replace(self, **changes)


def load_config(path: str | Path) -> MatchConfig:
    text = Path(path).read_text(encoding="utf-8")
    return parse_config(text)


def parse_config(text: str) -> MatchConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("top-level value must be an object", 1)
    return _build(data, text)


def _line_of(source: str | None, key: str) -> int | None:
    if not source:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), source)
    if not m:
        return None
    return source.count("\n", 0, m.start()) + 1


def _fill(cls, data: Any, where: str, source: str | None):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object", _line_of(source, where.split(".")[-1]))
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key {where}.{key}", _line_of(source, key))
        kwargs[key] = value
    try:
        obj = cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}", _line_of(source, where.split(".")[-1])) from None
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else None
        if default is None and f.default_factory is not dataclasses.MISSING:
            default = f.default_factory()
        value = getattr(obj, f.name)
        if default is None:
            continue
        _check_type(value, default, f"{where}.{f.name}", _line_of(source, f.name))
    return obj


def _check_type(value, default, name, line):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    elif isinstance(default, dict):
        ok = isinstance(value, dict)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{name} must be of type {type(default).__name__}", line)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        allow_zero = name.endswith(
            ("max_active", "spawn_probability", "clear_event_rate", "obstacle_density",
             "smoothing_passes", "verbosity", "seed", "goal_clusters", "dispensers_per_type")
        )
        if value < 0 or (value == 0 and not allow_zero):
            raise ConfigError(f"{name} must be positive", line)


def _build(data: dict[str, Any], source: str | None) -> MatchConfig:
    data = dict(data)
    world = _fill(WorldParams, data.pop("world", {}), "world", source)
    tasks = _fill(TaskParams, data.pop("tasks", {}), "tasks", source)
    raw_teams = data.pop("teams", None)
    teams = None
    if raw_teams is not None:
        if not isinstance(raw_teams, list) or not raw_teams:
            raise ConfigError("teams must be a non-empty list", _line_of(source, "teams"))
        teams = []
        for i, t in enumerate(raw_teams):
            if not isinstance(t, dict) or not {"name", "engine", "agents"} <= set(t):
                raise ConfigError(
                    f"teams[{i}] needs name, engine and agents", _line_of(source, "teams")
                )
            team = _fill(TeamConfig, t, f"teams[{i}]", source)
            if team.engine not in ENGINES:
                raise ConfigError(
                    f"teams[{i}].engine must be one of {', '.join(ENGINES)}",
                    _line_of(source, "engine"),
                )
            if not isinstance(team.agents, int) or team.agents < 1:
                raise ConfigError(f"teams[{i}].agents must be >= 1", _line_of(source, "agents"))
            teams.append(team)
    top = _fill(MatchConfig, data, "config", source)
    top.world, top.tasks = world, tasks
    if teams is not None:
        top.teams = teams
    if len({t.name for t in top.teams}) != len(top.teams):
        raise ConfigError("team names must be unique", _line_of(source, "teams"))
    if world.topology != "bounded":
        raise ConfigError("only topology 'bounded' is supported", _line_of(source, "topology"))
    if world.spawn not in ("random", "cluster"):
        raise ConfigError("world.spawn must be 'random' or 'cluster'", _line_of(source, "spawn"))
    if top.budget_mode not in ("ops", "wallclock"):
        raise ConfigError("budget_mode must be 'ops' or 'wallclock'", _line_of(source, "budget_mode"))
    if not world.block_types:
        raise ConfigError("world.block_types must not be empty", _line_of(source, "block_types"))
    if any(not isinstance(s, int) or not 1 <= s <= 4 for s in tasks.sizes) or not tasks.sizes:
        raise ConfigError("tasks.sizes entries must be integers in 1..4", _line_of(source, "sizes"))
    if not 0 <= world.obstacle_density < 1:
        raise ConfigError("world.obstacle_density must be in [0, 1)", _line_of(source, "obstacle_density"))
    return top
