"""Per-group, per-step action reservations.

Every approved action claims the cells its agent may occupy next step under
either outcome: the current footprint (the action fails) and the
transformed footprint (it succeeds), plus cells the action touches. Claims
are exclusive, so no combination of outcomes can put two friendly things on
one cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .actions import Action
from .geometry import DIRS, Coord, add, rotate_ccw, rotate_cw, sub


class Decision(NamedTuple):
    approved: bool
    conflict: int | None = None

    def __bool__(self) -> bool:
        return self.approved


@dataclass
class ReservationMap:
    step: int = 0
    cell_claims: dict[Coord, int] = field(default_factory=dict)
    resource_claims: dict[tuple, int] = field(default_factory=dict)
    claimant: dict[int, int] = field(default_factory=dict)
    acted: dict[int, int] = field(default_factory=dict)
    log: list[dict] = field(default_factory=list)

    def owner_key(self, agent_id: int) -> int:
        return self.claimant.get(agent_id, agent_id)


def reset_reservations(res: ReservationMap, step: int) -> ReservationMap:
    res.step = step
    res.cell_claims.clear()
    res.resource_claims.clear()
    res.claimant.clear()
    res.acted.clear()
    res.log.clear()
    return res


def register_standing(res: ReservationMap, agent_ids: Iterable[int], cells: Iterable[Coord]) -> None:
    """Pre-claim a (possibly multi-agent) component's current cells.

    Done for every group member before proposals so the failure outcome of
    any later action is covered regardless of proposal order.
    """
    ids = sorted(agent_ids)
    key = ids[0]
    for aid in ids:
        res.claimant[aid] = key
    for c in cells:
        res.cell_claims.setdefault(c, ids[0])


def success_cells(action: Action, pos: Coord, cells: Iterable[Coord]) -> set[Coord]:
    cells = set(cells)
    if action.kind == "move" and action.dir in DIRS:
        d = DIRS[action.dir]
        return {add(c, d) for c in cells}
    if action.kind == "rotate" and action.dir in ("cw", "ccw"):
        turn = rotate_cw if action.dir == "cw" else rotate_ccw
        return {add(pos, turn(sub(c, pos))) for c in cells}
    return cells


def needed(action: Action, pos: Coord, cells: Iterable[Coord]) -> tuple[set[Coord], list[tuple]]:
    cells = set(cells)
    out = cells | success_cells(action, pos, cells)
    resources: list[tuple] = []
    if action.kind in ("request", "attach") and action.dir in DIRS:
        target = add(pos, DIRS[action.dir])
        out.add(target)
        resources.append(("spawn" if action.kind == "request" else "block", target))
    elif action.kind == "clear" and action.rel is not None:
        out.add(add(pos, action.rel))
    return out, resources


def reserve_action(
    res: ReservationMap,
    agent_id: int,
    action: Action,
    cells: Iterable[Coord],
    pos: Coord | None = None,
) -> Decision:
    """Approve ``action`` and record its claims, or reject it leaving no trace.

    ``cells`` is the agent's current footprint (its own cell first when
    ``pos`` is omitted, which only matters for rotations).
    """
    cells = list(cells)
    if pos is None:
        pos = cells[0]
    me = res.owner_key(agent_id)
    cell_set, resources = needed(action, pos, cells)

    decision = Decision(True)
    prior = res.acted.get(me)
    if prior is not None and prior != agent_id and action.kind != "skip":
        decision = Decision(False, prior)
    if decision:
        for c in sorted(cell_set):
            owner = res.cell_claims.get(c)
            if owner is not None and res.owner_key(owner) != me:
                decision = Decision(False, owner)
                break
    if decision:
        for r in resources:
            owner = res.resource_claims.get(r)
            if owner is not None and owner != agent_id:
                decision = Decision(False, owner)
                break
    pair_key = None
    if decision and action.kind == "connect":
        if action.partner is None:
            decision = Decision(False, None)
        else:
            pair_key = ("connect", min(agent_id, action.partner), max(agent_id, action.partner))
            for key, owner in res.resource_claims.items():
                if key[0] == "connect" and key != pair_key and agent_id in key[1:]:
                    decision = Decision(False, owner)
                    break
    res.log.append({"type": "reservation", "step": res.step, "agent": agent_id,
                    "action": action.to_json(), "approved": decision.approved,
                    "conflict": decision.conflict})
    if not decision:
        return decision
    for c in cell_set:
        res.cell_claims[c] = agent_id
    for r in resources:
        res.resource_claims[r] = agent_id
    if pair_key is not None:
        res.resource_claims.setdefault(pair_key, agent_id)
    if action.kind != "skip":
        res.acted.setdefault(me, agent_id)
    return decision
