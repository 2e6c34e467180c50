"""Plan priority and single-action execution."""

from __future__ import annotations

from typing import Callable, Iterable

from .. import actions as A
from ..actions import Action
from .plans import OptionPlan

# 1 submit now, 2 split, 3 short GoSubmit, 4 Dodge, 5 other GoSubmit,
# 6 GoConnect, 7 Hoard, 8 Roam, 9 GoNearSubmit, 10 Dig
_TIER_OF_KIND = {"Split": 2, "Dodge": 4, "GoConnect": 6, "Hoard": 7, "Roam": 8,
                 "GoNearSubmit": 9, "Dig": 10}


def tier(plan: OptionPlan, connected: bool, short_len: int = 3) -> int | None:
    """Priority tier of ``plan`` (lower wins), or None when it is not eligible."""
    if plan.kind == "GoSubmit":
        if plan.first.kind == "submit":
            return 1
        return 3 if len(plan) < short_len else 5
    if plan.kind == "Split":
        return 2 if connected else None
    return _TIER_OF_KIND[plan.kind]


def rank(plans: Iterable[OptionPlan], connected: bool, short_len: int = 3) -> list[OptionPlan]:
    """Eligible plans, best first; equal tiers go shortest first."""
    keyed = []
    for i, p in enumerate(plans):
        t = tier(p, connected, short_len)
        if t is not None:
            keyed.append((t, len(p), i, p))
    keyed.sort(key=lambda e: e[:3])
    return [e[3] for e in keyed]


def select_plan(plans: Iterable[OptionPlan], connected: bool, short_len: int = 3) -> OptionPlan | None:
    ranked = rank(plans, connected, short_len)
    return ranked[0] if ranked else None


def act_step(
    ranked: list[OptionPlan],
    propose: Callable[[Action], object],
) -> tuple[Action, OptionPlan | None]:
    """First action of the best plan the reservation layer accepts, else skip."""
    for plan in ranked:
        if propose(plan.first):
            return plan.first, plan
    propose(A.SKIP)
    return A.SKIP, None
