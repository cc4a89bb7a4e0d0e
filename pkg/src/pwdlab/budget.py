"""Oracle draw accounting.

Pipelines refuse to exceed a configured draw budget and fail loudly rather
than silently subsample.
"""

from __future__ import annotations

from .errors import BudgetExceededError


class DrawBudget:
    """Counts oracle draws against a hard limit."""

    def __init__(self, limit: int):
        if limit < 1:
            raise ValueError("draw budget must be positive")
        self.limit = int(limit)
        self.used = 0

    def spend(self, n: int) -> None:
        n = int(n)
        if n < 0:
            raise ValueError("cannot spend a negative number of draws")
        if self.used + n > self.limit:
            raise BudgetExceededError(
                f"draw budget exhausted: {self.used} used, {n} requested, "
                f"limit {self.limit}"
            )
        self.used += n

    @property
    def remaining(self) -> int:
        return self.limit - self.used
