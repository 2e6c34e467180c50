from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..actions import Action

KINDS = ("GoSubmit", "Split", "Dodge", "GoConnect", "Hoard", "Roam", "GoNearSubmit", "Dig")


@dataclass
class OptionPlan:
    kind: str
    actions: list[Action]
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown plan kind {self.kind!r}")
        if not self.actions:
            raise ValueError("a plan needs at least one action")

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def first(self) -> Action:
        return self.actions[0]

    def summary(self) -> dict:
        return {"kind": self.kind, "length": len(self), "first": self.first.to_json()}
