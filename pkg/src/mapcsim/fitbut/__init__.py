"""Reactive engine: every step each agent rebuilds its options from scratch,
the best plan's first action is proposed to the group reservation map, and
rejected proposals fall through to the next plan."""

from .config import ReasonerConfig
from .plans import KINDS, OptionPlan
from .team import FitButTeam

__all__ = ["FitButTeam", "KINDS", "OptionPlan", "ReasonerConfig"]
