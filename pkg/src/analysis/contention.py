"""
Contention phase: probability that one SU wins at backoff slot i0, and the reservation overhead.
"""

import numpy as np

from src.schemas import MacTimingConfig


def contention_success_prob(i0: int, n0: int, W: int) -> float:
    """
    Probability that exactly one SU draws i0 and all others draw larger counters.

    P_succ(i0) = n0 (1/W) ((W - 1 - i0)/W)^(n0 - 1)
    """
    if n0 < 1 or W < 1:
        raise ValueError(f"need n0 >= 1 and W >= 1, got n0={n0}, W={W}")
    if not 0 <= i0 <= W - 1:
        raise ValueError(f"backoff slot {i0} outside [0, {W - 1}]")
    return n0 / W * ((W - 1 - i0) / W) ** (n0 - 1)


def success_probabilities(n0: int, W: int) -> np.ndarray:
    """P_succ(i0) for every i0 in [0, W-1]."""
    if n0 < 1 or W < 1:
        raise ValueError(f"need n0 >= 1 and W >= 1, got n0={n0}, W={W}")
    slots = np.arange(W, dtype=float)
    return n0 / W * ((W - 1 - slots) / W) ** (n0 - 1)


def reservation_overhead(i0, mac: MacTimingConfig):
    """T_ove(i0) = i0*sigma + 2*SIFS + RTS + CTS + DIFS; accepts a scalar or an array of slots."""
    slots = np.asarray(i0, dtype=float)
    if np.any(slots < 0):
        raise ValueError("backoff slot must be non-negative")
    overhead = slots * mac.mini_slot + 2 * mac.sifs + mac.rts + mac.cts + mac.difs
    return float(overhead) if np.ndim(overhead) == 0 else overhead
