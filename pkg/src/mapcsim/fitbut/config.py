from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Callable

from ..config import ConfigError


def always_interesting(block_type: str, agent_id: int, tasks) -> bool:
    return True


@dataclass
class ReasonerConfig:
    max_structure_size: int = 10  # blocks plus agents in a joined structure
    max_hoard: int = 1
    go_submit_short_len: int = 3
    max_iter: int = 2500
    pair_cap: int = 64
    budget_mode: str = "ops"  # "ops" counts A* expansions, "wallclock" uses step_budget_ms
    step_budget_ms: float = 500.0
    step_budget_ops: int = 20000
    is_block_interesting: Callable[[str, int, Any], bool] = field(default=always_interesting)

    def __post_init__(self) -> None:
        for name in ("max_structure_size", "max_hoard", "go_submit_short_len", "max_iter",
                     "pair_cap", "step_budget_ops"):
            if getattr(self, name) < 1:
                raise ConfigError(f"reasoner.{name} must be positive")
        if self.step_budget_ms <= 0:
            raise ConfigError("reasoner.step_budget_ms must be positive")
        if self.budget_mode not in ("ops", "wallclock"):
            raise ConfigError("reasoner.budget_mode must be 'ops' or 'wallclock'")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ReasonerConfig":
        known = {f.name for f in dataclasses.fields(cls)} - {"is_block_interesting"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown reasoner keys: {sorted(unknown)}")
        return cls(**data)
