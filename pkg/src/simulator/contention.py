"""
Empirical check of the contention model: who wins a round, and at which slot.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.settings import settings
from src.analysis.contention import success_probabilities
from src.schemas import NetworkConfig
from src.simulator.mac import resolve_contention


@dataclass
class CollisionModelEstimate:
    """Counts of unique winners per slot and of collisions over ``rounds`` contention rounds."""

    win_counts: np.ndarray
    collisions: int
    rounds: int
    num_su_pairs: int

    @property
    def win_frequency(self) -> np.ndarray:
        return self.win_counts / self.rounds

    @property
    def collision_frequency(self) -> float:
        return self.collisions / self.rounds

    def binomial_deviation(self) -> np.ndarray:
        """|empirical - P_succ(i0)| in units of the binomial standard deviation."""
        expected = success_probabilities(self.num_su_pairs, len(self.win_counts))
        sigma = np.sqrt(np.maximum(expected * (1 - expected), 1e-300) / self.rounds)
        return np.abs(self.win_frequency - expected) / sigma

    def within_bounds(self, sigmas: float = 3.0, min_expected_count: float = 5.0) -> bool:
        """Every slot with enough expected wins lies within ``sigmas`` binomial deviations."""
        expected = success_probabilities(self.num_su_pairs, len(self.win_counts))
        checked = expected * self.rounds >= min_expected_count
        return bool(np.all(self.binomial_deviation()[checked] <= sigmas))


def measure_collision_model(cfg: NetworkConfig, rounds: int = 100_000,
                            seed: Optional[int] = None) -> CollisionModelEstimate:
    """
    Draw fresh counters for every SU in each round and record the outcome.

    Uses the simulator's own contention resolution.
    """
    seed = settings.SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    W = cfg.mac.contention_window
    n0 = cfg.num_su_pairs
    wins = np.zeros(W, dtype=np.int64)
    collisions = 0
    draws = rng.integers(0, W, size=(rounds, n0))
    for counters in draws:
        slot, winners = resolve_contention(counters.tolist())
        if len(winners) == 1:
            wins[slot] += 1
        else:
            collisions += 1
    return CollisionModelEstimate(win_counts=wins, collisions=collisions, rounds=rounds, num_su_pairs=n0)
