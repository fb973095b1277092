"""
Discrete-event simulation of the FD cognitive MAC and of the HD periodic-sensing baseline.

Saturated SUs contend with DCF backoff (single stage, window W), freeze their
counters while the channel carries PU or SU energy, reserve the channel with
RTS/CTS and send K fragments. Sensing verdicts are Bernoulli draws from a
SensingModel at the realized PU event of each fragment.
"""

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np

from config.settings import settings
from src.errors import SimulationError
from src.schemas import NetworkConfig, PuEvent, SensingCalibration, SensingMode, SimStats
from src.sensing.models import ClosedFormSensing, SensingModel
from src.simulator.events import Event, EventKind, EventQueue
from src.simulator.pu_channel import PuTimeline
from src.throughput.fragment import FragmentRates

logger = logging.getLogger(__name__)

Variant = Literal["fd", "hd"]


@dataclass
class SuState:
    """
    DCF state of one saturated SU.

    Only stage 0 exists (one backoff stage), so the window stays W. A frozen SU
    does not count down; ``transmitting`` is set while the SU holds the channel
    and its next fragment carries data.
    """

    backoff_counter: int
    backoff_stage: int = 0
    frozen: bool = False
    transmitting: bool = False
    sensing_mode: SensingMode = SensingMode.FULL_DUPLEX


def resolve_contention(counters: Sequence[int]) -> Tuple[int, List[int]]:
    """Smallest counter and the SUs holding it (more than one means an RTS collision)."""
    slot = min(counters)
    return slot, [i for i, c in enumerate(counters) if c == slot]


def fragment_event(timeline: PuTimeline, a: float, b: float) -> Tuple[PuEvent, float, bool]:
    """
    PU event over [a, b), the local change instant and the end state.

    More than one change in a window (possible only when T equals the minimum
    durations) maps to the start/end states with the last change as instant.
    """
    start_active = timeline.state_before(a)
    changes = timeline.changes_in(a, b)
    end_active = start_active ^ (len(changes) % 2 == 1)
    if not changes:
        return PuEvent.from_states(start_active, end_active), 0.0, end_active
    event = PuEvent.from_states(start_active, end_active)
    return event, changes[-1] - a, end_active


class MacSimulator:
    """
    One simulation run of the FD protocol or the HD baseline.

    Args:
        cfg: Scenario
        sensing: Sensing model; its window is T for "fd" and T_S for "hd"
        variant: "fd" or "hd"
        seed: Seed of this run (PU and SU generators are spawned from it)
        sensing_time: HD sensing duration T_S (required for "hd")
        include_ack: Add SIFS + ACK after each packet (SIM_INCLUDE_ACK)
        persistent_backoff: Losers keep residual counters (SIM_PERSISTENT_BACKOFF)
        warmup_cycles: Cycles discarded before statistics (SIM_WARMUP_CYCLES)
    """

    def __init__(self, cfg: NetworkConfig, sensing: SensingModel, variant: Variant = "fd",
                 seed: Optional[int] = None, sensing_time: Optional[float] = None,
                 include_ack: Optional[bool] = None, persistent_backoff: Optional[bool] = None,
                 warmup_cycles: Optional[int] = None):
        if variant not in ("fd", "hd"):
            raise SimulationError(f"unknown protocol variant '{variant}'")
        T = cfg.mac.fragment_time
        if variant == "hd":
            if sensing_time is None or not 0 < sensing_time < T:
                raise SimulationError(f"HD sensing time must lie in (0, {T}), got {sensing_time}")
        self.cfg = cfg
        self.sensing = sensing
        self.variant = variant
        self.sensing_time = sensing_time
        self.include_ack = settings.SIM_INCLUDE_ACK if include_ack is None else include_ack
        self.persistent_backoff = (settings.SIM_PERSISTENT_BACKOFF if persistent_backoff is None
                                   else persistent_backoff)
        self.warmup_cycles = settings.SIM_WARMUP_CYCLES if warmup_cycles is None else warmup_cycles

        seed = settings.SEED if seed is None else seed
        pu_seed, su_seed = np.random.SeedSequence(seed).spawn(2)
        self.timeline = PuTimeline(cfg.pu, np.random.default_rng(pu_seed))
        self.rng = np.random.default_rng(su_seed)
        self.queue = EventQueue()

        if variant == "fd":
            self.rates = FragmentRates.for_config(cfg)
        else:
            self.rates = FragmentRates.from_radio(cfg.radio, receiver_self_interference=False)
        self.stations = [SuState(0) for _ in range(cfg.num_su_pairs)]
        for su in self.stations:
            su.backoff_counter = self._draw_counter(su)

        self.stats = SimStats()
        self._interference: Dict[int, float] = {}
        self._completed_cycles = 0
        self._measure_start: Optional[float] = None

    def _draw_counter(self, su: SuState) -> int:
        return int(self.rng.integers(0, self.cfg.mac.contention_window << su.backoff_stage))

    def _freeze_until_idle(self, t: float) -> None:
        for su in self.stations:
            su.frozen = True
        resume = self.timeline.next_change_after(t)
        self.queue.push(resume, EventKind.PU_CHANGE)

    def _count_down(self, slots: int) -> None:
        for su in self.stations:
            if not su.frozen:
                su.backoff_counter -= slots

    def _on_contention(self, t: float) -> None:
        mac = self.cfg.mac
        if self.timeline.state_at(t):
            self._freeze_until_idle(t)
            return
        for su in self.stations:
            su.frozen = su.transmitting
        active = [i for i, su in enumerate(self.stations) if not su.frozen]
        slot, winners = resolve_contention([self.stations[i].backoff_counter for i in active])
        winners = [active[i] for i in winners]
        ready = t + mac.difs + slot * mac.mini_slot
        activation = self.timeline.next_change_after(t)
        if activation < ready:
            # PU returns during DIFS or the countdown: keep the slots already counted
            counted = 0
            if activation > t + mac.difs:
                counted = min(int((activation - t - mac.difs) / mac.mini_slot), slot)
            self._count_down(counted)
            self._freeze_until_idle(activation)
            return

        if len(winners) == 1:
            self.stats.successes += 1
            self._reset_counters(slot, winners)
            self.stations[winners[0]].transmitting = True
            # others defer for the reserved period
            for su in self.stations:
                su.frozen = True
            data_start = ready + mac.rts + mac.sifs + mac.cts + mac.sifs
            self.queue.push(data_start, EventKind.DATA_START, winners[0])
        else:
            self.stats.collisions += 1
            self._reset_counters(slot, winners)
            self.queue.push(ready + mac.rts, EventKind.CYCLE_END)

    def _reset_counters(self, slot: int, involved: List[int]) -> None:
        if self.persistent_backoff:
            self._count_down(slot)
        for i, su in enumerate(self.stations):
            if i in involved or not self.persistent_backoff:
                su.backoff_counter = self._draw_counter(su)

    def _on_data_start(self, t: float, winner: int) -> None:
        su = self.stations[winner]
        su.transmitting = True
        su.sensing_mode = SensingMode.FULL_DUPLEX
        self.queue.push(t + self.cfg.mac.fragment_time, EventKind.FRAGMENT_END, (winner, 0))

    def _account_transmission(self, a: float, b: float) -> None:
        active = 0.0
        for activation, overlap in self.timeline.active_periods(a, b):
            self._interference[activation] = self._interference.get(activation, 0.0) + overlap
            active += overlap
        self.stats.pu_interference_time += active
        self.stats.bits_delivered += ((b - a) - active) * self.rates.rate_idle + active * self.rates.rate_busy

    def _record_verdict(self, busy: bool, end_active: bool) -> None:
        if not busy and end_active:
            self.stats.missed_detections += 1
        elif busy and not end_active:
            self.stats.false_alarm_stalls += 1

    def _on_fragment_end(self, e: float, winner: int, index: int) -> None:
        T = self.cfg.mac.fragment_time
        a = e - T
        su = self.stations[winner]
        if self.variant == "fd":
            mode = SensingMode.FULL_DUPLEX if su.transmitting else SensingMode.HALF_DUPLEX
            if su.transmitting:
                self._account_transmission(a, e)
                self.stats.fragments_fd += 1
            else:
                self.stats.fragments_hd += 1
            event, local_t, end_active = fragment_event(self.timeline, a, e)
            busy = self.rng.random() < float(self.sensing.busy_probability(event, local_t, mode))
            self._record_verdict(busy, end_active)
            # next fragment transmits only after an idle verdict; busy means sense-only HD
            su.transmitting = not busy
            su.sensing_mode = SensingMode.HALF_DUPLEX if busy else SensingMode.FULL_DUPLEX
        else:
            sensed_until = a + self.sensing_time
            event, local_t, end_active = fragment_event(self.timeline, a, sensed_until)
            busy = self.rng.random() < float(
                self.sensing.busy_probability(event, local_t, SensingMode.HALF_DUPLEX)
            )
            self._record_verdict(busy, end_active)
            if not busy:
                self._account_transmission(sensed_until, e)
                self.stats.fragments_hd += 1

        if index + 1 < self.cfg.mac.fragments_per_packet:
            self.queue.push(e + T, EventKind.FRAGMENT_END, (winner, index + 1))
        else:
            su.transmitting = False
            end = e + (self.cfg.mac.sifs + settings.SIM_ACK if self.include_ack else 0.0)
            self.queue.push(end, EventKind.CYCLE_END)

    def _start_measuring(self, t: float) -> None:
        self._measure_start = t
        self.stats = SimStats()
        self._interference = {}

    def _finish(self, t: float) -> SimStats:
        start = self._measure_start
        elapsed = t - start
        active = self.timeline.active_overlap(start, t)
        self.stats.elapsed = elapsed
        self.stats.pu_idle_time = elapsed - active
        self.stats.pu_activations = self.timeline.activations_in(start, t)
        self.stats.max_activation_interference = max(self._interference.values(), default=0.0)
        return self.stats

    def run(self, horizon: float) -> SimStats:
        """
        Simulate ``horizon`` seconds after warm-up, stopping at the first cycle boundary past it.

        Raises:
            SimulationError: if the horizon does not complete a single cycle
        """
        if not horizon >= self.cfg.mac.packet_length:
            raise SimulationError(
                f"horizon {horizon}s is shorter than one packet ({self.cfg.mac.packet_length}s)"
            )
        if self.warmup_cycles == 0:
            self._start_measuring(0.0)
        self.queue.push(0.0, EventKind.CONTENTION)
        while self.queue:
            event: Event = self.queue.pop()
            t = event.time
            if event.kind in (EventKind.CONTENTION, EventKind.PU_CHANGE):
                self._on_contention(t)
            elif event.kind is EventKind.DATA_START:
                self._on_data_start(t, event.payload)
            elif event.kind is EventKind.FRAGMENT_END:
                winner, index = event.payload
                self._on_fragment_end(t, winner, index)
            elif event.kind is EventKind.CYCLE_END:
                self._completed_cycles += 1
                if self._measure_start is None:
                    if self._completed_cycles >= self.warmup_cycles:
                        self._start_measuring(t)
                else:
                    self.stats.cycles += 1
                    if t - self._measure_start >= horizon:
                        return self._finish(t)
                self.queue.push(t, EventKind.CONTENTION)
        raise SimulationError("event queue drained before the horizon was reached")


def _as_sensing(cfg: NetworkConfig, calib: Union[SensingCalibration, SensingModel, None]) -> SensingModel:
    if calib is None:
        return ClosedFormSensing.calibrated(cfg)
    if isinstance(calib, SensingCalibration):
        return ClosedFormSensing.from_calibration(cfg, calib)
    return calib


def run_fd(cfg: NetworkConfig, calib: Union[SensingCalibration, SensingModel, None] = None,
           horizon: float = 100.0, seed: Optional[int] = None, **options) -> SimStats:
    """Simulate the FD protocol; ``calib`` may be a calibration or any SensingModel."""
    sensing = _as_sensing(cfg, calib)
    stats = MacSimulator(cfg, sensing, "fd", seed, **options).run(horizon)
    logger.debug(f"FD run seed={seed}: NT={stats.normalized_throughput:.5f} over {stats.cycles} cycles")
    return stats


def run_hd(cfg: NetworkConfig, calib_hd: Union[SensingModel, None] = None, sensing_time: float = 1e-3,
           horizon: float = 100.0, seed: Optional[int] = None, **options) -> SimStats:
    """
    Simulate the HD periodic-sensing baseline: sense T_S, then transmit T - T_S on an idle verdict.

    ``calib_hd`` defaults to an HD threshold calibrated for the window T_S.
    """
    sensing = calib_hd if calib_hd is not None else ClosedFormSensing.half_duplex_only(cfg, sensing_time)
    if abs(sensing.window - sensing_time) > 1e-12:
        raise SimulationError(f"sensing model window {sensing.window} differs from T_S={sensing_time}")
    stats = MacSimulator(cfg, sensing, "hd", seed, sensing_time=sensing_time, **options).run(horizon)
    logger.debug(f"HD run seed={seed}: NT={stats.normalized_throughput:.5f} over {stats.cycles} cycles")
    return stats
