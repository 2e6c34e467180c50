"""Agent actions and action results."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .geometry import Coord

KINDS = ("move", "rotate", "attach", "detach", "connect", "request", "clear", "submit", "skip")

SUCCESS = "success"
CHARGING = "charging"
CLEARED = "cleared"


@dataclass(frozen=True)
class Action:
    kind: str
    dir: str | None = None
    rel: Coord | None = None
    partner: int | None = None
    partner_rel: Coord | None = None
    task: str | None = None

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.dir is not None:
            out["dir"] = self.dir
        if self.rel is not None:
            out["rel"] = list(self.rel)
        if self.partner is not None:
            out["partner"] = self.partner
        if self.partner_rel is not None:
            out["partner_rel"] = list(self.partner_rel)
        if self.task is not None:
            out["task"] = self.task
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Action":
        rel = data.get("rel")
        prel = data.get("partner_rel")
        return cls(
            kind=data["kind"],
            dir=data.get("dir"),
            rel=tuple(rel) if rel is not None else None,
            partner=data.get("partner"),
            partner_rel=tuple(prel) if prel is not None else None,
            task=data.get("task"),
        )

    def __str__(self) -> str:
        args = [str(v) for v in (self.dir, self.rel, self.partner, self.partner_rel, self.task) if v is not None]
        return f"{self.kind}({', '.join(args)})"


def move(d: str) -> Action:
    return Action("move", dir=d)


def rotate(d: str) -> Action:
    return Action("rotate", dir=d)


def attach(d: str) -> Action:
    return Action("attach", dir=d)


def detach(d: str) -> Action:
    return Action("detach", dir=d)


def request(d: str) -> Action:
    return Action("request", dir=d)


def clear(rel: Coord) -> Action:
    return Action("clear", rel=tuple(rel))


def submit(task: str) -> Action:
    return Action("submit", task=task)


def connect(partner: int, own: Coord, other: Coord) -> Action:
    return Action("connect", rel=tuple(own), partner=partner, partner_rel=tuple(other))


SKIP = Action("skip")


def failed(reason: str) -> str:
    return f"failed_{reason}"


def is_failure(result: str) -> bool:
    return result.startswith("failed_")


def is_ok(result: str) -> bool:
    return not is_failure(result)
