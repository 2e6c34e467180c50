from __future__ import annotations

import random
from collections import defaultdict

from .. import actions as A
from ..actions import Action
from ..config import WorldParams
from ..geometry import DIR_ORDER, DIRS, add
from ..teamcore import AgentView, TeamCore, component_of
from ..world import Percept
from .assembly import AssemblyResult, assemble_tasks
from .config import ReasonerConfig
from .options import dig_option, dodge_option, go_near_submit_option, hoard_option, roam_plans
from .plans import OptionPlan
from .selection import act_step, rank, tier
from .watchdog import Watchdog

AVOID_STEPS = 10


def split_plan(view: AgentView) -> OptionPlan | None:
    """Detach this agent from its own block so the partner keeps the structure."""
    dirs = [view.anchor_dir] if view.anchor_dir else []
    dirs += [d for d in DIR_ORDER if DIRS[d] in view.blocks and d not in dirs]
    if not dirs:
        return None
    return OptionPlan("Split", [A.detach(dirs[0])])


def local_options(view: AgentView, now: int, rules: WorldParams, cfg: ReasonerConfig,
                  counter=None) -> list[OptionPlan]:
    """Dodge, GoNearSubmit and Dig, in that order; Dig is skipped when dodging."""
    out = []
    dodge = dodge_option(view, now, cfg, counter)
    if dodge is not None:
        out.append(dodge)
    near = go_near_submit_option(view, cfg, counter)
    if near is not None:
        out.append(near)
    if dodge is None:
        dig = dig_option(view, rules, cfg, counter)
        if dig is not None:
            out.append(dig)
    return out


class FitButTeam:
    engine = "fitbut"

    def __init__(self, name: str, agent_ids, rules: WorldParams, reasoner: ReasonerConfig | None = None,
                 seed: int = 0, verbosity: int = 0):
        self.rules = rules
        self.cfg = reasoner or ReasonerConfig()
        self.core = TeamCore(name, list(agent_ids), random.Random(f"{seed}:{name}"), verbosity)
        self.name = name
        self.splitters: set[int] = set()
        self.roles: dict[int, str] = {}
        self.avoid: dict[int, tuple[int, tuple, int]] = {}
        self.last_views: dict[int, AgentView] = {}
        self.last_assembly: dict[int, AssemblyResult] = {}
        self.watchdog_trips = 0

    @property
    def agent_ids(self) -> list[int]:
        return self.core.agent_ids

    @property
    def registry(self):
        return self.core.registry

    def group_id(self, aid: int) -> int:
        return self.core.group_id(aid)

    def drain_events(self) -> list[dict]:
        return self.core.drain_events()

    def _update_flags(self, views: dict[int, AgentView], now: int) -> None:
        for aid, v in views.items():
            p = v.percept
            if p.last_action.kind == "connect" and p.last_result == A.SUCCESS:
                if self.roles.get(aid) == "joiner":
                    self.splitters.add(aid)
            if not v.connected:
                self.splitters.discard(aid)
            if p.last_action.kind in ("attach", "request") and A.is_failure(p.last_result):
                target = add(v.pos, DIRS[p.last_action.dir]) if p.last_action.dir in DIRS else None
                if target is not None:
                    self.avoid[aid] = (v.group.group_id, target, now + AVOID_STEPS)
        self.roles = {}

    def _avoid_for(self, v: AgentView, now: int) -> list:
        entry = self.avoid.get(v.id)
        if entry is None:
            return []
        gid, cell, until = entry
        if gid != v.group.group_id or until < now:
            del self.avoid[v.id]
            return []
        return [cell]

    def decide(self, percepts: dict[int, Percept]) -> dict[int, Action]:
        views = self.core.observe(percepts)
        self.last_views = views
        now = next(iter(views.values())).percept.step
        self._update_flags(views, now)
        by_group: dict[int, list[AgentView]] = defaultdict(list)
        for aid in sorted(views):
            by_group[views[aid].group.group_id].append(views[aid])
        res_maps = self.core.reservation_maps(views, now)
        actions: dict[int, Action] = {}
        for gid in sorted(by_group):
            actions.update(self._decide_group(by_group[gid], views, res_maps[gid], now))
        self.core.flush_reservation_log(res_maps.values())
        return actions

    def plans_for_group(self, gviews: list[AgentView], views: dict[int, AgentView], now: int
                        ) -> dict[int, list[OptionPlan]]:
        cfg = self.cfg
        plans: dict[int, list[OptionPlan]] = {v.id: [] for v in gviews}
        tasks = list(gviews[0].percept.tasks)
        free = []
        for v in gviews:
            if v.connected:
                comp = component_of(views, v.id)
                flagged = [a for a in comp if a in self.splitters]
                if v.id in self.splitters or (not flagged and v.id == max(comp)):
                    sp = split_plan(v)
                    if sp is not None:
                        plans[v.id].append(sp)
                continue
            plans[v.id].extend(local_options(v, now, self.rules, cfg))
            free.append(v)

        wd = Watchdog(cfg.budget_mode, cfg.step_budget_ms, cfg.step_budget_ops)
        assigned: set[int] = set()
        result = assemble_tasks(free, tasks, cfg, wd)
        self.last_assembly[gviews[0].group.group_id] = result
        for aid, plan in list(result.submit.items()) + list(result.connect.items()):
            plans[aid].append(plan)
            assigned.add(aid)
        rest = [v for v in free if v.id not in assigned]
        roamers = []
        for v in rest:
            if wd.expired():
                roamers.append(v)
                continue
            plan = hoard_option(v, tasks, now, cfg, wd.counter, self._avoid_for(v, now))
            if plan is not None:
                plans[v.id].append(plan)
            else:
                roamers.append(v)
        if not wd.expired():
            for aid, plan in roam_plans(roamers, cfg, self.core.rng, wd.counter).items():
                plans[aid].append(plan)
        if wd.tripped:
            self.watchdog_trips += 1
        return plans

    def _decide_group(self, gviews, views, res, now) -> dict[int, Action]:
        cfg = self.cfg
        plans = self.plans_for_group(gviews, views, now)
        ranked = {v.id: rank(plans[v.id], v.connected, cfg.go_submit_short_len) for v in gviews}

        def order_key(v: AgentView):
            r = ranked[v.id]
            best = tier(r[0], v.connected, cfg.go_submit_short_len) if r else 99
            return (best, v.id)

        out = {}
        for v in sorted(gviews, key=order_key):
            act, plan = act_step(ranked[v.id], lambda a, v=v: self.core.propose(res, v, a))
            out[v.id] = act
            if plan is not None and plan.kind == "GoConnect" and act.kind == "connect":
                self.roles[v.id] = plan.meta["role"]
            if self.core.verbosity >= 2:
                self.core.events.append({
                    "type": "reasoning", "step": now, "team": self.name, "agent": v.id,
                    "options": [p.summary() for p in ranked[v.id]],
                    "selected": plan.kind if plan else None, "action": act.to_json(),
                })
        return out
