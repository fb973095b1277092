"""
Time-ordered event queue for the discrete-event simulator.
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, List, Optional
import heapq
import itertools


class EventKind(IntEnum):
    """Lower value wins ties at equal timestamps: PU changes before SU decisions."""
    PU_CHANGE = 0
    CONTENTION = 1
    DATA_START = 2
    FRAGMENT_END = 3
    CYCLE_END = 4


@dataclass(order=True)
class Event:
    time: float
    kind: EventKind
    seq: int
    payload: Any = field(default=None, compare=False)


class EventQueue:
    """Min-heap of events ordered by (time, kind, insertion order)."""

    def __init__(self):
        self._heap: List[Event] = []
        self._counter = itertools.count()
        self.now = 0.0

    def push(self, time: float, kind: EventKind, payload: Any = None) -> Event:
        if time < self.now:
            raise ValueError(f"cannot schedule at {time} before current time {self.now}")
        event = Event(time, EventKind(kind), next(self._counter), payload)
        heapq.heappush(self._heap, event)
        return event

    def pop(self) -> Event:
        event = heapq.heappop(self._heap)
        self.now = event.time
        return event

    def peek(self) -> Optional[Event]:
        return self._heap[0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)
