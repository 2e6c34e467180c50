from __future__ import annotations

import time


class Watchdog:
    """Step budget for the group phase.

    In ``ops`` mode the budget is a count of A* expansions, which keeps runs
    deterministic; ``wallclock`` mode measures elapsed milliseconds.
    """

    def __init__(self, mode: str = "ops", budget_ms: float = 500.0, budget_ops: int = 20000):
        self.mode = mode
        self.budget_ms = budget_ms
        self.budget_ops = budget_ops
        self.counter = [0]
        self.started = time.perf_counter()
        self.tripped = False

    def remaining_ops(self) -> int:
        return max(0, self.budget_ops - self.counter[0])

    def expired(self) -> bool:
        if self.mode == "ops":
            over = self.counter[0] >= self.budget_ops
        else:
            over = (time.perf_counter() - self.started) * 1000.0 >= self.budget_ms
        self.tripped = self.tripped or over
        return over
