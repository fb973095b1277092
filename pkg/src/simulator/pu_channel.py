"""
Primary-user channel: an alternating idle/active renewal process that starts idle at time 0.
"""

from bisect import bisect_left, bisect_right
from typing import List, Tuple

import numpy as np

from src.model.distributions import shifted_exp_sample
from src.schemas import PuActivityModel


class PuTimeline:
    """
    Lazily extended sequence of PU change instants.

    Change k (0-based) ends an idle period when k is even and an active period
    when k is odd, so the PU is active after an odd number of changes.
    """

    def __init__(self, pu: PuActivityModel, rng: np.random.Generator):
        self.pu = pu
        self.rng = rng
        self.changes: List[float] = []
        self._end = 0.0

    def _extend(self, until: float) -> None:
        while self._end <= until:
            if len(self.changes) % 2 == 0:
                duration = shifted_exp_sample(self.pu.mean_idle, self.pu.min_idle, self.rng)
            else:
                duration = shifted_exp_sample(self.pu.mean_active, self.pu.min_active, self.rng)
            self._end += float(duration)
            self.changes.append(self._end)

    def changes_before(self, t: float) -> int:
        """Number of changes at or before t."""
        self._extend(t)
        return bisect_right(self.changes, t)

    def state_at(self, t: float) -> bool:
        """True when the PU is active at t (a change at t has already happened)."""
        return self.changes_before(t) % 2 == 1

    def state_before(self, t: float) -> bool:
        """State just before t (a change exactly at t has not happened yet)."""
        self._extend(t)
        return bisect_left(self.changes, t) % 2 == 1

    def next_change_after(self, t: float) -> float:
        self._extend(t)
        return self.changes[bisect_right(self.changes, t)]

    def changes_in(self, a: float, b: float) -> List[float]:
        """Change instants in [a, b)."""
        self._extend(b)
        return self.changes[bisect_left(self.changes, a):bisect_left(self.changes, b)]

    def active_periods(self, a: float, b: float) -> List[Tuple[int, float]]:
        """
        (activation index, overlap) for every active period intersecting [a, b).

        Activation i is the active period that starts at change 2i.
        """
        if b <= a:
            return []
        self._extend(b)
        first = bisect_right(self.changes, a)
        result = []
        # active period i spans [changes[2i], changes[2i+1])
        k = first - 1 if first % 2 == 1 else first
        while k < len(self.changes) and self.changes[k] < b:
            start = self.changes[k]
            end = self.changes[k + 1] if k + 1 < len(self.changes) else np.inf
            overlap = min(end, b) - max(start, a)
            if overlap > 0:
                result.append((k // 2, overlap))
            k += 2
        return result

    def active_overlap(self, a: float, b: float) -> float:
        """Time the PU is active within [a, b)."""
        return float(sum(overlap for _, overlap in self.active_periods(a, b)))

    def activations_in(self, a: float, b: float) -> int:
        """Idle-to-active changes in [a, b)."""
        self._extend(b)
        first, last = bisect_left(self.changes, a), bisect_left(self.changes, b)
        return sum(1 for k in range(first, last) if k % 2 == 0)
