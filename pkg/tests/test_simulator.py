import math

import numpy as np
import pytest

from src.analysis import reservation_overhead, success_probabilities
from src.model.distributions import prob_idle
from src.errors import SimulationError
from src.model.scenario import default_scenario
from src.schemas import PuEvent
from src.sensing import ClosedFormSensing, PerfectSensing
from src.simulator import (
    EventKind,
    EventQueue,
    MacSimulator,
    PuTimeline,
    measure_collision_model,
    resolve_contention,
    run_fd,
    run_hd,
    run_replications,
)
from src.simulator.mac import fragment_event
from src.throughput import FragmentRates


@pytest.fixture
def quiet_cfg():
    """One SU, W = 1 and a PU that practically never returns."""
    return default_scenario(num_su_pairs=1, mac__contention_window=1, pu__mean_idle="1000000s")


class TestEventQueue:
    def test_time_then_kind_order(self):
        queue = EventQueue()
        queue.push(1.0, EventKind.CYCLE_END, "end")
        queue.push(1.0, EventKind.PU_CHANGE, "pu")
        queue.push(0.5, EventKind.CONTENTION, "first")
        assert [queue.pop().payload for _ in range(3)] == ["first", "pu", "end"]
        assert queue.now == 1.0
        assert not queue

    def test_insertion_order_breaks_remaining_ties(self):
        queue = EventQueue()
        for name in ("a", "b", "c"):
            queue.push(2.0, EventKind.FRAGMENT_END, name)
        assert queue.peek().payload == "a"
        assert [queue.pop().payload for _ in range(3)] == ["a", "b", "c"]

    def test_no_scheduling_in_the_past(self):
        queue = EventQueue()
        queue.push(1.0, EventKind.CONTENTION)
        queue.pop()
        with pytest.raises(ValueError):
            queue.push(0.5, EventKind.CONTENTION)


class TestPuTimeline:
    def test_alternating_durations(self, cfg):
        timeline = PuTimeline(cfg.pu, np.random.default_rng(0))
        timeline.changes_before(20.0)
        durations = np.diff([0.0] + timeline.changes)
        assert np.all(durations[0::2] >= cfg.pu.min_idle)
        assert np.all(durations[1::2] >= cfg.pu.min_active)

    def test_state_queries(self, cfg):
        timeline = PuTimeline(cfg.pu, np.random.default_rng(1))
        first = timeline.next_change_after(0.0)
        assert timeline.state_at(0.0) is False
        assert timeline.state_before(first) is False
        assert timeline.state_at(first) is True
        second = timeline.next_change_after(first)
        assert timeline.active_overlap(0.0, second) == pytest.approx(second - first)
        assert timeline.changes_in(0.0, second) == [first]

    def test_activation_count(self, cfg):
        timeline = PuTimeline(cfg.pu, np.random.default_rng(2))
        timeline.changes_before(10.0)
        c = timeline.changes
        assert timeline.activations_in(0.0, c[3]) == 2
        assert [i for i, _ in timeline.active_periods(0.0, c[3])] == [0, 1]

    def test_fragment_event(self, cfg):
        timeline = PuTimeline(cfg.pu, np.random.default_rng(0))
        timeline.changes = [0.01, 0.05]
        timeline._end = 0.05
        event, local_t, end_active = fragment_event(timeline, 0.0, 0.018)
        assert event is PuEvent.H01
        assert local_t == pytest.approx(0.01)
        assert end_active is True
        assert fragment_event(timeline, 0.02, 0.038)[0] is PuEvent.H11


def test_resolve_contention():
    assert resolve_contention([3, 1, 1, 5]) == (1, [1, 2])
    assert resolve_contention([0, 4]) == (0, [0])


class TestDeterministicRuns:
    def test_single_su_fd_matches_closed_form(self, quiet_cfg):
        cfg = quiet_cfg
        stats = run_fd(cfg, PerfectSensing(window=cfg.mac.fragment_time), horizon=10.0, seed=1)
        K, T = cfg.mac.fragments_per_packet, cfg.mac.fragment_time
        rate = FragmentRates.for_config(cfg).rate_idle
        expected = K * T * rate / (reservation_overhead(0, cfg.mac) + K * T)
        assert stats.normalized_throughput == pytest.approx(expected, rel=1e-9)
        assert stats.collisions == 0
        assert stats.successes == stats.cycles

    def test_single_su_hd_matches_closed_form(self, quiet_cfg):
        cfg = quiet_cfg
        t_s = 2e-3
        stats = run_hd(cfg, PerfectSensing(window=t_s), sensing_time=t_s, horizon=10.0, seed=1)
        K, T = cfg.mac.fragments_per_packet, cfg.mac.fragment_time
        rate = math.log2(1 + cfg.radio.tx_power / cfg.radio.noise_power)
        expected = K * (T - t_s) * rate / (reservation_overhead(0, cfg.mac) + K * T)
        assert stats.normalized_throughput == pytest.approx(expected, rel=1e-9)

    def test_perfect_sensing_limits_interference_to_one_fragment(self, small_cfg):
        T = small_cfg.mac.fragment_time
        stats = run_fd(small_cfg, PerfectSensing(window=T), horizon=60.0, seed=4)
        assert stats.pu_activations > 0
        assert stats.missed_detections == 0
        assert stats.false_alarm_stalls == 0
        assert stats.max_activation_interference <= T * (1 + 1e-9)

    def test_same_seed_same_run(self, small_cfg):
        sensing = ClosedFormSensing.calibrated(small_cfg)
        a = run_fd(small_cfg, sensing, horizon=5.0, seed=8)
        b = run_fd(small_cfg, sensing, horizon=5.0, seed=8)
        assert a == b

    def test_replications_do_not_depend_on_workers(self, small_cfg):
        sensing = ClosedFormSensing.calibrated(small_cfg)
        runner = lambda s: run_fd(small_cfg, sensing, horizon=2.0, seed=s)  # noqa: E731
        assert run_replications(runner, [1, 2, 3], workers=1) == run_replications(runner, [1, 2, 3], workers=3)

    def test_silent_transmitter_delivers_nothing(self, small_cfg):
        cfg = small_cfg.model_copy(update={"radio": small_cfg.radio.model_copy(update={"tx_power": 0.0})})
        stats = run_fd(cfg, PerfectSensing(window=cfg.mac.fragment_time), horizon=5.0, seed=2)
        assert stats.cycles > 0
        assert stats.bits_delivered == 0.0
        assert stats.normalized_throughput == 0.0

    def test_idle_fraction_matches_renewal_mean(self):
        cfg = default_scenario(num_su_pairs=2, mac__contention_window=4, mac__max_contention_window=4,
                               pu__mean_idle="100ms", pu__mean_active="50ms")
        stats = run_fd(cfg, PerfectSensing(window=cfg.mac.fragment_time), horizon=300.0, seed=12)
        assert stats.idle_fraction == pytest.approx(prob_idle(cfg.pu), abs=0.02)


class TestBackoff:
    @pytest.fixture
    def pair(self):
        cfg = default_scenario(num_su_pairs=2, mac__contention_window=16, mac__max_contention_window=16)
        sim = MacSimulator(cfg, PerfectSensing(window=cfg.mac.fragment_time), seed=0, persistent_backoff=True)
        for su, counter in zip(sim.stations, (10, 12)):
            su.backoff_counter = counter
        mac = cfg.mac
        activation = mac.difs + 3.5 * mac.mini_slot
        sim.timeline.changes = [activation, activation + 0.5, 100.0]
        sim.timeline._end = 100.0
        return sim, activation

    def test_counters_keep_counted_slots_and_freeze(self, pair):
        sim, _ = pair
        sim._on_contention(0.0)
        assert [su.backoff_counter for su in sim.stations] == [7, 9]
        assert all(su.frozen for su in sim.stations)
        assert sim.queue.pop().kind is EventKind.PU_CHANGE

    def test_counters_hold_while_primary_is_busy(self, pair):
        sim, activation = pair
        sim._on_contention(0.0)
        sim._on_contention(activation + 0.1)
        assert [su.backoff_counter for su in sim.stations] == [7, 9]
        assert all(su.frozen and not su.transmitting for su in sim.stations)

    def test_countdown_resumes_after_the_primary_leaves(self, pair):
        sim, activation = pair
        mac = sim.cfg.mac
        sim._on_contention(0.0)
        resume = activation + 0.5
        sim._on_contention(resume)
        winner, other = sim.stations
        assert winner.transmitting and not other.transmitting
        assert other.backoff_counter == 2
        assert other.frozen
        events = [sim.queue.pop() for _ in range(len(sim.queue))]
        data = [e for e in events if e.kind is EventKind.DATA_START]
        assert len(data) == 1
        assert data[0].payload == 0
        expected = resume + mac.difs + 7 * mac.mini_slot + mac.rts + mac.sifs + mac.cts + mac.sifs
        assert data[0].time == pytest.approx(expected)

    def test_nobody_transmits_after_a_run(self, small_cfg):
        sim = MacSimulator(small_cfg, ClosedFormSensing.calibrated(small_cfg), seed=3)
        sim.run(2.0)
        assert not any(su.transmitting for su in sim.stations)
        assert all(su.backoff_stage == 0 for su in sim.stations)
        assert all(0 <= su.backoff_counter < small_cfg.mac.contention_window for su in sim.stations)


class TestGuards:
    def test_short_horizon(self, cfg, perfect):
        with pytest.raises(SimulationError):
            run_fd(cfg, perfect, horizon=0.01)

    def test_unknown_variant(self, cfg, perfect):
        with pytest.raises(SimulationError):
            MacSimulator(cfg, perfect, variant="xd")

    def test_hd_sensing_time_inside_fragment(self, cfg):
        with pytest.raises(SimulationError):
            MacSimulator(cfg, PerfectSensing(window=0.018), variant="hd", sensing_time=0.018)

    def test_hd_window_mismatch(self, cfg):
        with pytest.raises(SimulationError):
            run_hd(cfg, PerfectSensing(window=1e-3), sensing_time=2e-3, horizon=1.0)


class TestCollisionModel:
    @pytest.mark.parametrize("n0, W", [(2, 4), (5, 16)])
    def test_win_frequencies_match(self, n0, W):
        cfg = default_scenario(num_su_pairs=n0, mac__contention_window=W)
        estimate = measure_collision_model(cfg, rounds=100_000, seed=3)
        assert estimate.within_bounds(sigmas=4.0)
        expected_collisions = 1 - success_probabilities(n0, W).sum()
        assert estimate.collision_frequency == pytest.approx(expected_collisions, abs=0.01)

    @pytest.mark.slow
    def test_default_network(self, cfg):
        estimate = measure_collision_model(cfg, rounds=100_000, seed=3)
        assert estimate.within_bounds(sigmas=4.0)
