"""
Integration backends for the expected bits of a packet over the PU change instants.

Both backends work on a list of reservation offsets (T_ove values). Time zero of the
PU process is the start of the reservation, so the first change of the data phase
sits at t_1 - offset.

- Monte Carlo: draws the alternating idle/active durations once per block
  (counter-seeded, cached) and reuses them for every offset (common random numbers).
- Quadrature: nested adaptive quadrature over at most two changes per packet.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from threading import Lock
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from cachetools import LRUCache
from scipy.integrate import quad
from tqdm import tqdm

from config.settings import settings
from src.analysis.patterns import PuPattern, expected_bits, fragment_profile
from src.errors import IntegrationError
from src.model.distributions import (
    residual_exp_pdf,
    residual_exp_sample,
    residual_exp_survival,
    shifted_exp_pdf,
    shifted_exp_sample,
    shifted_exp_survival,
)
from src.schemas import EVENT_CODE, EVENT_ORDER, PuActivityModel, PuEvent
from src.sensing.models import SensingModel
from src.throughput.fragment import FragmentRates

logger = logging.getLogger(__name__)

_sample_cache = LRUCache(maxsize=256)
_sample_lock = Lock()


@dataclass(frozen=True)
class PacketModel:
    """Everything the integrand needs besides the change instants."""

    sensing: SensingModel
    rates: FragmentRates
    fragment_time: float
    num_fragments: int
    count_first_fragment: bool = True

    @property
    def horizon(self) -> float:
        return self.num_fragments * self.fragment_time

    def bits_for_times(self, change_times: np.ndarray) -> np.ndarray:
        """Expected bits for an (n, m) matrix of change instants relative to the data phase."""
        codes, local_t = fragment_profile(change_times, self.num_fragments, self.fragment_time)
        return expected_bits(codes, local_t, self.sensing, self.rates, self.fragment_time,
                             self.count_first_fragment)

    def bits_without_change(self) -> float:
        events = [PuEvent.H00] * self.num_fragments
        return expected_bits(events, [0.0] * self.num_fragments, self.sensing, self.rates,
                             self.fragment_time, self.count_first_fragment)


@dataclass
class OffsetEvaluation:
    """Backend output: per-offset expected bits (without the P(H0) prefactor)."""

    values: np.ndarray
    weighted_samples: Optional[np.ndarray] = None
    error_estimates: Optional[np.ndarray] = None


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Generator for one sample block; depends only on (seed, block index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def draw_change_times(pu: PuActivityModel, num_changes: int, size: int, rng: np.random.Generator,
                      first_idle: str = "fresh") -> np.ndarray:
    """
    Cumulative PU change instants measured from the reservation start.

    The first duration is idle (fresh shifted-exponential draw, or the stationary
    residual when ``first_idle == "residual"``), then active and idle alternate.

    Returns:
        (size, num_changes) array of increasing instants
    """
    durations = np.empty((size, num_changes))
    if first_idle == "residual":
        durations[:, 0] = residual_exp_sample(pu.mean_idle, pu.min_idle, rng, size)
    else:
        durations[:, 0] = shifted_exp_sample(pu.mean_idle, pu.min_idle, rng, size)
    for k in range(1, num_changes):
        if k % 2 == 1:
            durations[:, k] = shifted_exp_sample(pu.mean_active, pu.min_active, rng, size)
        else:
            durations[:, k] = shifted_exp_sample(pu.mean_idle, pu.min_idle, rng, size)
    return np.cumsum(durations, axis=1)


def cached_change_times(pu: PuActivityModel, num_changes: int, size: int, seed: int, block: int,
                        first_idle: str) -> np.ndarray:
    key = (pu, num_changes, size, seed, block, first_idle)
    with _sample_lock:
        if key in _sample_cache:
            return _sample_cache[key]
    times = draw_change_times(pu, num_changes, size, block_rng(seed, block), first_idle)
    times.setflags(write=False)
    with _sample_lock:
        _sample_cache[key] = times
    return times


def _block_sizes(samples: int, block_size: int) -> List[int]:
    full, rest = divmod(samples, block_size)
    return [block_size] * full + ([rest] if rest else [])


def _evaluate_block(packet: PacketModel, pu: PuActivityModel, offsets: np.ndarray, weights: np.ndarray,
                    size: int, seed: int, block: int, first_idle: str,
                    clean_bits: float) -> Tuple[np.ndarray, np.ndarray]:
    times = cached_change_times(pu, packet.num_fragments + 1, size, seed, block, first_idle)
    sums = np.empty(len(offsets))
    weighted = np.zeros(size)
    for k, offset in enumerate(offsets):
        first = times[:, 0] - offset
        # starts busy: outside every pattern region
        values = np.where(first < 0, 0.0, clean_bits)
        changing = (first >= 0) & (first < packet.horizon)
        if changing.any():
            values[changing] = packet.bits_for_times(times[changing] - offset)
        sums[k] = values.sum()
        weighted += weights[k] * values
    return sums, weighted


def monte_carlo_offsets(packet: PacketModel, pu: PuActivityModel, offsets: Sequence[float],
                        weights: Optional[Sequence[float]] = None, samples: Optional[int] = None,
                        seed: Optional[int] = None, workers: Optional[int] = None,
                        first_idle: Optional[str] = None, show_progress: bool = False) -> OffsetEvaluation:
    """
    Monte Carlo expected bits at each offset, with common random numbers across offsets.

    Args:
        packet: Integrand description
        pu: PU activity model
        offsets: Reservation overheads to evaluate
        weights: Per-offset weights; the weighted per-sample sums are returned for
            standard-error estimation
        samples: Total samples (ANALYSIS_SAMPLES)
        seed: Base seed (SEED)
        workers: Threads for block evaluation (WORKERS); results do not depend on it
        first_idle: "fresh" or "residual" first idle draw
        show_progress: tqdm bar over blocks

    Returns:
        OffsetEvaluation with per-offset means and per-sample weighted sums
    """
    samples = settings.ANALYSIS_SAMPLES if samples is None else samples
    seed = settings.SEED if seed is None else seed
    workers = settings.WORKERS if workers is None else workers
    first_idle = settings.FIRST_IDLE_SAMPLING if first_idle is None else first_idle
    if samples < 2:
        raise ValueError("Monte Carlo backend needs at least two samples")

    offsets = np.asarray(offsets, dtype=float)
    weights = np.zeros(len(offsets)) if weights is None else np.asarray(weights, dtype=float)
    clean_bits = packet.bits_without_change()
    sizes = _block_sizes(samples, settings.ANALYSIS_BLOCK_SIZE)

    def run(block: int):
        return _evaluate_block(packet, pu, offsets, weights, sizes[block], seed, block, first_idle, clean_bits)

    blocks = range(len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            iterator = pool.map(run, blocks)
            results = list(tqdm(iterator, total=len(sizes), desc="MC blocks") if show_progress else iterator)
    else:
        iterator = tqdm(blocks, desc="MC blocks") if show_progress else blocks
        results = [run(block) for block in iterator]

    totals = np.sum([sums for sums, _ in results], axis=0)
    weighted = np.concatenate([w for _, w in results])
    return OffsetEvaluation(values=totals / samples, weighted_samples=weighted)


def max_changes_in_packet(pu: PuActivityModel, offset: float, horizon: float, first_idle: str = "fresh") -> int:
    """Largest number of PU changes that can fall inside [0, horizon)."""
    first_min = 0.0 if first_idle == "residual" else pu.min_idle
    earliest = max(first_min - offset, 0.0)
    count = 0
    gaps = (pu.min_active, pu.min_idle)
    while earliest < horizon:
        earliest += gaps[count % 2]
        count += 1
    return count


def nested_expectation(payoff: Callable[[Tuple[float, ...]], float], pu: PuActivityModel, offset: float,
                       horizon: float, fragment_time: float, first_idle: str = "fresh",
                       max_changes: int = 2) -> Tuple[float, float]:
    """
    E[payoff(changes inside the packet)] by nested adaptive quadrature.

    Realizations whose first change precedes the data phase contribute zero.

    Returns:
        (value, absolute error estimate)

    Raises:
        ValueError: if more than ``max_changes`` changes fit in the packet
    """
    possible = max_changes_in_packet(pu, offset, horizon, first_idle)
    if possible > max_changes:
        raise ValueError(
            f"quadrature backend handles at most {max_changes} changes per packet, "
            f"this scenario allows {possible}; use the monte_carlo backend"
        )
    inner_errors: List[float] = []
    boundaries = [j * fragment_time for j in range(1, int(round(horizon / fragment_time)))]

    def duration_law(level: int, active: bool):
        if active:
            return (lambda d: shifted_exp_pdf(d, pu.mean_active, pu.min_active),
                    lambda d: shifted_exp_survival(d, pu.mean_active, pu.min_active), pu.min_active)
        if level == 0 and first_idle == "residual":
            return (lambda d: residual_exp_pdf(d, pu.mean_idle, pu.min_idle),
                    lambda d: residual_exp_survival(d, pu.mean_idle, pu.min_idle), 0.0)
        return (lambda d: shifted_exp_pdf(d, pu.mean_idle, pu.min_idle),
                lambda d: shifted_exp_survival(d, pu.mean_idle, pu.min_idle), pu.min_idle)

    def expectation(changes: Tuple[float, ...], start: float, active: bool) -> Tuple[float, float]:
        level = len(changes)
        pdf, survival, min_gap = duration_law(level, active)
        value = float(survival(horizon - start)) * payoff(changes)
        low = max(start + min_gap, 0.0)
        if low >= horizon:
            return value, 0.0
        points = [b for b in boundaries if low < b < horizon]
        if level == 0 and first_idle == "residual" and low < start + pu.min_idle < horizon:
            points.append(start + pu.min_idle)

        def integrand(c: float) -> float:
            inner, inner_error = expectation(changes + (c,), c, not active)
            if inner_error:
                inner_errors.append(inner_error)
            return float(pdf(c - start)) * inner

        integral, error = quad(integrand, low, horizon, epsabs=settings.QUAD_ABS_TOL, epsrel=1e-8,
                               limit=200, points=sorted(points) or None)
        return value + integral, error

    value, error = expectation((), -offset, False)
    if inner_errors:
        error += max(inner_errors)
    return value, error


def quadrature_offsets(packet: PacketModel, pu: PuActivityModel, offsets: Sequence[float],
                       first_idle: Optional[str] = None, show_progress: bool = False) -> OffsetEvaluation:
    """
    Deterministic expected bits at each offset (packets with at most two changes).

    Raises:
        IntegrationError: if an error estimate exceeds 1e-6
    """
    first_idle = settings.FIRST_IDLE_SAMPLING if first_idle is None else first_idle

    def payoff(changes: Tuple[float, ...]) -> float:
        # one spare instant beyond the packet keeps the profile shape fixed
        times = np.array([list(changes) + [math.inf]])
        return float(packet.bits_for_times(times)[0])

    values, errors = [], []
    iterator = tqdm(offsets, desc="Quadrature offsets") if show_progress else offsets
    for offset in iterator:
        value, error = nested_expectation(payoff, pu, float(offset), packet.horizon, packet.fragment_time,
                                          first_idle)
        if error > 1e-6:
            raise IntegrationError(f"nested quadrature at offset {offset:.6g}s", error)
        values.append(value)
        errors.append(error)
    return OffsetEvaluation(values=np.array(values), error_estimates=np.array(errors))


def monte_carlo_pattern_mass(pu: PuActivityModel, offset: float, num_fragments: int, T: float,
                             samples: int, seed: int, first_idle: str = "fresh") -> Dict[PuPattern, float]:
    """Fraction of samples realizing each pattern (busy-start samples belong to none)."""
    sizes = _block_sizes(samples, settings.ANALYSIS_BLOCK_SIZE)
    counts: Dict[Tuple[int, ...], int] = {}
    for block, size in enumerate(sizes):
        times = cached_change_times(pu, num_fragments + 1, size, seed, block, first_idle) - offset
        valid = times[:, 0] >= 0
        if not valid.any():
            continue
        codes, _ = fragment_profile(times[valid], num_fragments, T)
        rows, freq = np.unique(codes, axis=0, return_counts=True)
        for row, count in zip(rows, freq):
            key = tuple(int(c) for c in row)
            counts[key] = counts.get(key, 0) + int(count)
    return {
        PuPattern(tuple(EVENT_ORDER[c] for c in key)): count / samples
        for key, count in sorted(counts.items())
    }


def quadrature_pattern_mass(pu: PuActivityModel, offset: float, pattern: PuPattern, T: float,
                            first_idle: str = "fresh") -> float:
    """Probability mass of one pattern's region by nested quadrature."""
    target = tuple(EVENT_CODE[e] for e in pattern.events)
    horizon = pattern.num_fragments * T

    def indicator(changes: Tuple[float, ...]) -> float:
        times = np.array([list(changes) + [math.inf]])
        codes, _ = fragment_profile(times, pattern.num_fragments, T)
        return 1.0 if tuple(int(c) for c in codes[0]) == target else 0.0

    value, _ = nested_expectation(indicator, pu, offset, horizon, T, first_idle)
    return value
