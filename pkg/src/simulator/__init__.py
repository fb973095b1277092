"""
Discrete-event simulator of the FD MAC protocol and the HD baseline
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

from config.settings import settings
from src.schemas import SimStats

from .contention import CollisionModelEstimate, measure_collision_model
from .events import Event, EventKind, EventQueue
from .mac import MacSimulator, SuState, resolve_contention, run_fd, run_hd
from .pu_channel import PuTimeline


def run_replications(runner: Callable[[int], SimStats], seeds: Sequence[int],
                     workers: Optional[int] = None) -> List[SimStats]:
    """Independent runs, one per seed, returned in seed order."""
    workers = settings.WORKERS if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(runner, seeds))
    return [runner(seed) for seed in seeds]


__all__ = [
    "CollisionModelEstimate",
    "measure_collision_model",
    "Event",
    "EventKind",
    "EventQueue",
    "MacSimulator",
    "SuState",
    "resolve_contention",
    "run_fd",
    "run_hd",
    "PuTimeline",
    "run_replications",
]
