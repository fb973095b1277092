"""
PU activity patterns over a packet, joint sensing outcomes and the per-packet expected bits.

A packet has K fragments of length T. Change instants are measured from the start
of the data phase; fragment j (1-based) covers [(j-1)T, jT).
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from config.settings import settings
from src.schemas import EVENT_CODE, EVENT_ORDER, PuEvent, SensingMode
from src.sensing.models import SensingModel
from src.throughput.fragment import FragmentRates, fragment_bits

logger = logging.getLogger(__name__)

_IDLE_FOLLOWERS = {PuEvent.H00, PuEvent.H01}
_ACTIVE_FOLLOWERS = {PuEvent.H11, PuEvent.H10}


@dataclass(frozen=True)
class PuPattern:
    """One admissible sequence of PU events across the K fragments of a packet."""

    events: Tuple[PuEvent, ...]

    def __post_init__(self):
        events = tuple(PuEvent(e) for e in self.events)
        object.__setattr__(self, "events", events)
        if not events:
            raise ValueError("a pattern needs at least one fragment")
        if events[0] not in _IDLE_FOLLOWERS:
            raise ValueError("the data phase must start with the PU idle")
        for previous, current in zip(events, events[1:]):
            allowed = _ACTIVE_FOLLOWERS if previous.ends_active else _IDLE_FOLLOWERS
            if current not in allowed:
                raise ValueError(f"{current.value} cannot follow {previous.value}")

    @classmethod
    def from_change_fragments(cls, num_fragments: int, change_fragments: Sequence[int]) -> "PuPattern":
        changes = set(change_fragments)
        active = False
        events = []
        for j in range(1, num_fragments + 1):
            ends_active = (not active) if j in changes else active
            events.append(PuEvent.from_states(active, ends_active))
            active = ends_active
        return cls(tuple(events))

    @property
    def num_fragments(self) -> int:
        return len(self.events)

    @property
    def change_fragments(self) -> Tuple[int, ...]:
        return tuple(j for j, e in enumerate(self.events, start=1) if e.has_change)

    @property
    def num_changes(self) -> int:
        return len(self.change_fragments)

    def index_sets(self) -> Dict[PuEvent, FrozenSet[int]]:
        """Fragment indices of each event; the four sets partition 1..K."""
        return {
            event: frozenset(j for j, e in enumerate(self.events, start=1) if e is event)
            for event in EVENT_ORDER
        }

    @property
    def label(self) -> str:
        return "-".join(e.value[1:] for e in self.events)

    def codes(self) -> np.ndarray:
        return np.array([EVENT_CODE[e] for e in self.events], dtype=np.int8)


@dataclass(frozen=True)
class SensingOutcomeSet:
    """Joint verdicts of the K fragments of one packet."""

    num_fragments: int
    idle_verdict_fragments: FrozenSet[int]
    count_first_fragment: bool = True

    def __post_init__(self):
        idle = frozenset(self.idle_verdict_fragments)
        if any(not 1 <= j <= self.num_fragments for j in idle):
            raise ValueError(f"verdict indices must lie in 1..{self.num_fragments}")
        object.__setattr__(self, "idle_verdict_fragments", idle)

    @property
    def busy_verdict_fragments(self) -> FrozenSet[int]:
        return frozenset(range(1, self.num_fragments + 1)) - self.idle_verdict_fragments

    @property
    def transmit_fragments(self) -> FrozenSet[int]:
        """Successors of idle verdicts (clipped to K), plus fragment 1 when it is counted."""
        successors = {j + 1 for j in self.idle_verdict_fragments if j + 1 <= self.num_fragments}
        if self.count_first_fragment:
            successors.add(1)
        return frozenset(successors)

    def sensing_mode(self, j: int) -> SensingMode:
        """Fragment 1 and every fragment after an idle verdict sense while transmitting."""
        if j == 1 or (j - 1) in self.idle_verdict_fragments:
            return SensingMode.FULL_DUPLEX
        return SensingMode.HALF_DUPLEX


@dataclass(frozen=True)
class ChangeInstantVector:
    """Intervals between consecutive PU changes, starting from the reservation start."""

    intervals: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        intervals = tuple(float(x) for x in self.intervals)
        if any(x < 0 for x in intervals):
            raise ValueError("intervals must be non-negative")
        object.__setattr__(self, "intervals", intervals)

    def change_times(self, offset: float) -> np.ndarray:
        """Change instants relative to the data-phase start (reservation lasts ``offset``)."""
        return np.cumsum(self.intervals) - offset


def realized_pattern(change_times: Sequence[float], num_fragments: int, T: float) -> Optional[PuPattern]:
    """Pattern realized by the change instants, or None if the data phase starts busy."""
    times = np.asarray(change_times, dtype=float)
    if times.size and times[0] < 0:
        return None
    codes, _ = fragment_profile(times[np.newaxis, :], num_fragments, T)
    return PuPattern(tuple(EVENT_ORDER[c] for c in codes[0]))


def enumerate_patterns(num_fragments: int, max_fragments: Optional[int] = None) -> List[PuPattern]:
    """All 2^K patterns, ordered by their change flags (fragment 1 most significant)."""
    cap = settings.MAX_FRAGMENTS if max_fragments is None else max_fragments
    if num_fragments < 1:
        raise ValueError("need at least one fragment")
    if num_fragments > cap:
        raise ValueError(
            f"K={num_fragments} exceeds the enumeration cap of {cap} "
            f"(cost grows as 4^K); raise MAX_FRAGMENTS to go further"
        )
    patterns = []
    for flags in product((False, True), repeat=num_fragments):
        changes = [j for j, flag in enumerate(flags, start=1) if flag]
        patterns.append(PuPattern.from_change_fragments(num_fragments, changes))
    return patterns


def enumerate_outcomes(num_fragments: int, count_first_fragment: bool = True) -> List[SensingOutcomeSet]:
    outcomes = []
    for busy_flags in product((False, True), repeat=num_fragments):
        idle = frozenset(j for j, busy in enumerate(busy_flags, start=1) if not busy)
        outcomes.append(SensingOutcomeSet(num_fragments, idle, count_first_fragment))
    return outcomes


def fragment_profile(change_times: np.ndarray, num_fragments: int, T: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-fragment event codes and local change instants.

    Args:
        change_times: (n, m) increasing change instants relative to the data-phase start
        num_fragments: K
        T: Fragment time

    Returns:
        (codes, local_t), both shaped (n, K); codes index EVENT_ORDER and local_t is 0
        for fragments without a change
    """
    times = np.atleast_2d(np.asarray(change_times, dtype=float))
    n = times.shape[0]
    codes = np.empty((n, num_fragments), dtype=np.int8)
    local_t = np.zeros((n, num_fragments))
    for j in range(num_fragments):
        start, end = j * T, (j + 1) * T
        starts_active = (np.count_nonzero(times < start, axis=1) % 2) == 1
        in_window = (times >= start) & (times < end)
        has_change = in_window.any(axis=1)
        local_t[:, j] = np.where(in_window, times - start, 0.0).sum(axis=1)
        codes[:, j] = np.where(
            starts_active,
            np.where(has_change, EVENT_CODE[PuEvent.H10], EVENT_CODE[PuEvent.H11]),
            np.where(has_change, EVENT_CODE[PuEvent.H01], EVENT_CODE[PuEvent.H00]),
        )
    return codes, local_t


def busy_matrix(model: SensingModel, codes: np.ndarray, local_t: np.ndarray,
                mode: SensingMode) -> np.ndarray:
    """Busy-verdict probability of every fragment under one sensing mode."""
    out = np.empty(codes.shape)
    for code, event in enumerate(EVENT_ORDER):
        mask = codes == code
        if not mask.any():
            continue
        if event.has_change:
            out[mask] = model.busy_probability(event, local_t[mask], mode)
        else:
            out[mask] = model.busy_probability(event, 0.0, mode)
    return out


def bits_matrix(codes: np.ndarray, local_t: np.ndarray, T: float, rates: FragmentRates) -> np.ndarray:
    out = np.empty(codes.shape)
    for code, event in enumerate(EVENT_ORDER):
        mask = codes == code
        if not mask.any():
            continue
        if event.has_change:
            out[mask] = fragment_bits(event, local_t[mask], T, rates)
        else:
            out[mask] = fragment_bits(event, 0.0, T, rates)
    return out


def _as_codes(events) -> Tuple[np.ndarray, bool]:
    if isinstance(events, np.ndarray) and events.dtype.kind in "iu":
        return np.atleast_2d(events), events.ndim == 1
    return np.array([[EVENT_CODE[PuEvent(e)] for e in events]], dtype=np.int8), True


def expected_bits(events: Union[Sequence[PuEvent], np.ndarray], instants: Union[Sequence[float], np.ndarray],
                  model: SensingModel, rates: FragmentRates, T: float,
                  count_first_fragment: bool = True) -> Union[float, np.ndarray]:
    """
    Expected bits/Hz of one packet, averaged over the joint sensing outcomes.

    Forward recursion over fragments on the previous verdict: fragment j >= 2
    transmits iff verdict j-1 was idle, and is sensed FD after an idle verdict and
    HD after a busy one. Fragment 1 is always FD. Equals the explicit sum over all
    2^K outcomes of outcome_probability_and_bits.

    Args:
        events: PU events of one packet, or an (n, K) integer code matrix
        instants: Local change instants, same shape as events
        model: Sensing model whose window is T
        rates: Link SNRs
        T: Fragment time
        count_first_fragment: Count fragment 1's bits

    Returns:
        A float for a single packet, an (n,) array for a code matrix
    """
    codes, single = _as_codes(events)
    local_t = np.atleast_2d(np.asarray(instants, dtype=float))
    if local_t.shape != codes.shape:
        raise ValueError(f"instants shape {local_t.shape} does not match events {codes.shape}")

    busy_fd = busy_matrix(model, codes, local_t, SensingMode.FULL_DUPLEX)
    busy_hd = busy_matrix(model, codes[:, 1:], local_t[:, 1:], SensingMode.HALF_DUPLEX)
    bits = bits_matrix(codes, local_t, T, rates)

    total = bits[:, 0].copy() if count_first_fragment else np.zeros(codes.shape[0])
    p_busy = busy_fd[:, 0]
    for j in range(1, codes.shape[1]):
        p_idle = 1.0 - p_busy
        total += p_idle * bits[:, j]
        p_busy = p_idle * busy_fd[:, j] + p_busy * busy_hd[:, j - 1]
    return float(total[0]) if single else total


def outcome_probability_and_bits(pattern: PuPattern, outcome: SensingOutcomeSet,
                                 instants: Sequence[float], model: SensingModel,
                                 rates: FragmentRates, T: float) -> Tuple[float, float]:
    """
    Probability of one joint outcome and the bits it delivers, for fixed change instants.

    Idle verdicts contribute 1 - P(busy), busy verdicts P(busy), each under the mode
    its predecessor dictates.

    Args:
        pattern: PU pattern of the packet
        outcome: Joint sensing verdicts
        instants: Local change instant of each fragment (ignored where no change)
        model: Sensing model
        rates: Link SNRs
        T: Fragment time
    """
    K = pattern.num_fragments
    if outcome.num_fragments != K or len(instants) != K:
        raise ValueError(
            f"pattern has {K} fragments, outcome {outcome.num_fragments}, instants {len(instants)}"
        )
    probability = 1.0
    for j, (event, t) in enumerate(zip(pattern.events, instants), start=1):
        busy = float(model.busy_probability(event, t, outcome.sensing_mode(j)))
        probability *= (1.0 - busy) if j in outcome.idle_verdict_fragments else busy
    bits = sum(float(fragment_bits(pattern.events[j - 1], instants[j - 1], T, rates))
               for j in outcome.transmit_fragments)
    return probability, bits


def pattern_instants(pattern: PuPattern, t_vec: ChangeInstantVector, offset: float, T: float) -> Tuple[float, ...]:
    """
    Local change instants of ``pattern`` realized by ``t_vec``.

    Raises:
        ValueError: if the interval vector does not realize the pattern
    """
    if len(t_vec.intervals) != pattern.num_changes + 1:
        raise ValueError(
            f"pattern with {pattern.num_changes} changes needs {pattern.num_changes + 1} intervals"
        )
    times = t_vec.change_times(offset)
    realized = realized_pattern(times, pattern.num_fragments, T)
    if realized != pattern:
        raise ValueError("change instants fall outside the pattern's region")
    _, local_t = fragment_profile(times[np.newaxis, :], pattern.num_fragments, T)
    return tuple(float(x) for x in local_t[0])
