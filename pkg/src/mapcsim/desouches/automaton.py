"""Blocks-scenario automaton.

Every member walks GoToDispenser -> GetBlock -> GoToGoalPosition ->
RotateBlock -> Connect. The commander then submits; lieutenants detach
their block and are done.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

GO_TO_DISPENSER = "GoToDispenser"
GET_BLOCK = "GetBlock"
GO_TO_GOAL = "GoToGoalPosition"
ROTATE_BLOCK = "RotateBlock"
CONNECT = "Connect"
DETACH = "Detach"
SUBMIT = "Submit"
DONE = "Done"
FAILED = "Failed"
RANDOM_WALK = "RandomWalk"

STATES = (GO_TO_DISPENSER, GET_BLOCK, GO_TO_GOAL, ROTATE_BLOCK, CONNECT, DETACH, SUBMIT, DONE, FAILED)

SUCCEEDED = "goalSucceeded"
GOAL_FAILED = "goalFailed"
BLOCK_LOST = "blockLost"
EVENTS = (SUCCEEDED, GOAL_FAILED, BLOCK_LOST)

_COMMON = (GO_TO_DISPENSER, GET_BLOCK, GO_TO_GOAL, ROTATE_BLOCK, CONNECT)
COMMANDER_SEQUENCE = _COMMON + (SUBMIT, DONE)
LIEUTENANT_SEQUENCE = _COMMON + (DETACH, DONE)

RETRY_CAP = 5
RESTART_CAP = 5


@dataclass(frozen=True)
class ScenarioAutomaton:
    role: str  # "commander" | "lieutenant"
    index: int = 0
    state: str = GO_TO_DISPENSER
    task: str | None = None
    block_type: str | None = None
    goal_offset: tuple[int, int] = (0, 0)
    connect_dir: str | None = None
    failures: int = 0
    restarts: int = 0
    detour: bool = False
    retry_cap: int = RETRY_CAP
    restart_cap: int = RESTART_CAP

    @property
    def sequence(self) -> tuple[str, ...]:
        return COMMANDER_SEQUENCE if self.role == "commander" else LIEUTENANT_SEQUENCE

    @property
    def finished(self) -> bool:
        return self.state in (DONE, FAILED)

    @property
    def goal(self) -> str | None:
        if self.finished:
            return None
        return RANDOM_WALK if self.detour else self.state


def step_automaton(auto: ScenarioAutomaton, event: str) -> tuple[ScenarioAutomaton, str | None]:
    """Apply one goal outcome; returns the new automaton and its next goal."""
    if event not in EVENTS:
        raise ValueError(f"unknown event {event!r}")
    if auto.finished:
        return auto, None
    if event == BLOCK_LOST:
        if auto.restarts + 1 >= auto.restart_cap:
            nxt = replace(auto, state=FAILED, detour=False)
        else:
            nxt = replace(auto, state=GO_TO_DISPENSER, failures=0, detour=False,
                          restarts=auto.restarts + 1)
    elif event == SUCCEEDED:
        if auto.detour:
            nxt = replace(auto, detour=False)
        else:
            seq = auto.sequence
            nxt = replace(auto, state=seq[seq.index(auto.state) + 1], failures=0)
    else:
        failures = auto.failures + 1
        if failures >= auto.retry_cap:
            nxt = replace(auto, state=FAILED, failures=failures, detour=False)
        elif auto.detour:
            nxt = replace(auto, failures=failures, detour=False)
        else:
            nxt = replace(auto, failures=failures, detour=auto.state == GO_TO_DISPENSER)
    return nxt, nxt.goal
