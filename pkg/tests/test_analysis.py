import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.analysis import (
    ChangeInstantVector,
    PuPattern,
    SensingOutcomeSet,
    conditional_throughput,
    contention_success_prob,
    enumerate_outcomes,
    enumerate_patterns,
    expected_bits,
    normalized_throughput,
    outcome_probability_and_bits,
    pattern_instants,
    pattern_mass,
    reservation_overhead,
    success_probabilities,
)
from src.analysis.engine import offset_basis, packet_model
from src.analysis.integration import (
    block_rng,
    draw_change_times,
    max_changes_in_packet,
    monte_carlo_offsets,
    quadrature_offsets,
)
from src.model.distributions import prob_idle
from src.model.scenario import default_scenario
from src.schemas import PuEvent, SensingMode
from src.sensing import ClosedFormSensing, PerfectSensing
from src.throughput import FragmentRates, fragment_bits


def fixed_sensing(cfg, threshold_fd=1.45, threshold_hd=1.005):
    return ClosedFormSensing(radio=cfg.radio, window=cfg.mac.fragment_time, threshold_fd=threshold_fd,
                             threshold_hd=threshold_hd, tx_power=cfg.radio.tx_power)


class TestContention:
    def test_worked_example(self):
        assert contention_success_prob(0, 2, 4) == pytest.approx(0.375)

    def test_single_su_always_succeeds(self):
        assert success_probabilities(1, 16).sum() == pytest.approx(1.0)

    @pytest.mark.parametrize("n0, W", [(2, 4), (5, 16), (40, 1024)])
    def test_success_mass_below_one(self, n0, W):
        p = success_probabilities(n0, W)
        assert 0 < p.sum() <= 1
        assert p[0] == pytest.approx(contention_success_prob(0, n0, W))
        assert p[-1] == 0.0

    def test_slot_range_checked(self):
        with pytest.raises(ValueError):
            contention_success_prob(4, 2, 4)

    def test_reservation_overhead(self, cfg):
        base = 2 * 10e-6 + 352e-6 + 304e-6 + 50e-6
        assert reservation_overhead(0, cfg.mac) == pytest.approx(base)
        assert reservation_overhead(10, cfg.mac) == pytest.approx(base + 10 * 20e-6)
        assert reservation_overhead(np.arange(3), cfg.mac).shape == (3,)


class TestPatterns:
    def test_enumeration(self):
        patterns = enumerate_patterns(3)
        assert len(patterns) == 8
        assert len(set(patterns)) == 8
        assert all(p.events[0] in (PuEvent.H00, PuEvent.H01) for p in patterns)

    def test_index_sets_partition(self):
        for pattern in enumerate_patterns(4):
            sets = pattern.index_sets()
            union = set().union(*sets.values())
            assert union == {1, 2, 3, 4}
            assert sum(len(s) for s in sets.values()) == 4

    def test_invalid_successor_rejected(self):
        with pytest.raises(ValueError):
            PuPattern((PuEvent.H01, PuEvent.H00))
        with pytest.raises(ValueError):
            PuPattern((PuEvent.H11,))

    def test_enumeration_cap(self):
        with pytest.raises(ValueError):
            enumerate_patterns(13)

    def test_outcome_sets(self):
        outcome = SensingOutcomeSet(3, frozenset({1, 3}))
        assert outcome.busy_verdict_fragments == {2}
        assert outcome.transmit_fragments == {1, 2}
        assert outcome.sensing_mode(2) is SensingMode.FULL_DUPLEX
        assert outcome.sensing_mode(3) is SensingMode.HALF_DUPLEX
        assert SensingOutcomeSet(3, frozenset({1}), count_first_fragment=False).transmit_fragments == {2}

    def test_pattern_instants(self):
        pattern = PuPattern((PuEvent.H00, PuEvent.H01))
        instants = pattern_instants(pattern, ChangeInstantVector((0.051, 0.05)), 0.001, 0.04)
        assert instants[0] == 0.0
        assert instants[1] == pytest.approx(0.01)

    def test_pattern_instants_outside_region(self):
        pattern = PuPattern((PuEvent.H01, PuEvent.H10))
        with pytest.raises(ValueError):
            pattern_instants(pattern, ChangeInstantVector((0.051, 0.05, 0.05)), 0.001, 0.04)


@st.composite
def pattern_and_instants(draw):
    K = draw(st.integers(min_value=1, max_value=4))
    pattern = draw(st.sampled_from(enumerate_patterns(K)))
    instants = [draw(st.floats(min_value=0.0, max_value=0.018)) for _ in range(K)]
    return pattern, instants


class TestOutcomes:
    @given(pattern_and_instants())
    @settings(max_examples=200, deadline=None)
    def test_outcome_probabilities_sum_to_one(self, case):
        cfg = default_scenario()
        pattern, instants = case
        sensing = fixed_sensing(cfg)
        rates = FragmentRates.for_config(cfg)
        total = sum(
            outcome_probability_and_bits(pattern, outcome, instants, sensing, rates, 0.018)[0]
            for outcome in enumerate_outcomes(pattern.num_fragments)
        )
        assert abs(total - 1.0) <= 1e-9

    @given(pattern_and_instants(), st.booleans())
    @settings(max_examples=100, deadline=None)
    def test_recursion_matches_outcome_sum(self, case, count_first):
        cfg = default_scenario()
        pattern, instants = case
        sensing = fixed_sensing(cfg)
        rates = FragmentRates.for_config(cfg)
        explicit = 0.0
        for outcome in enumerate_outcomes(pattern.num_fragments, count_first):
            probability, bits = outcome_probability_and_bits(pattern, outcome, instants, sensing, rates, 0.018)
            explicit += probability * bits
        recursive = expected_bits(pattern.events, instants, sensing, rates, 0.018, count_first)
        assert recursive == pytest.approx(explicit, rel=1e-10, abs=1e-15)

    def test_perfect_sensing_idle_packet_sends_everything(self, cfg):
        rates = FragmentRates.for_config(cfg)
        sensing = PerfectSensing(window=0.018)
        bits = expected_bits([PuEvent.H00] * 4, [0.0] * 4, sensing, rates, 0.018)
        assert bits == pytest.approx(4 * fragment_bits(PuEvent.H00, 0.0, 0.018, rates))

    def test_perfect_sensing_stops_after_activation(self, cfg):
        rates = FragmentRates.for_config(cfg)
        sensing = PerfectSensing(window=0.018)
        events = [PuEvent.H00, PuEvent.H01, PuEvent.H11, PuEvent.H11]
        bits = expected_bits(events, [0.0, 0.009, 0.0, 0.0], sensing, rates, 0.018)
        expected = fragment_bits(PuEvent.H00, 0.0, 0.018, rates) + fragment_bits(PuEvent.H01, 0.009, 0.018, rates)
        assert bits == pytest.approx(expected)


class TestIntegration:
    def test_block_rng_depends_only_on_seed_and_block(self):
        a = block_rng(7, 3).random(4)
        b = block_rng(7, 3).random(4)
        c = block_rng(7, 4).random(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_change_times_respect_minimum_durations(self, cfg):
        times = draw_change_times(cfg.pu, 3, 1000, np.random.default_rng(0))
        gaps = np.diff(np.concatenate([np.zeros((1000, 1)), times], axis=1), axis=1)
        assert np.all(gaps[:, 0] >= cfg.pu.min_idle)
        assert np.all(gaps[:, 1] >= cfg.pu.min_active)
        assert np.all(gaps[:, 2] >= cfg.pu.min_idle)

    def test_max_changes(self, cfg, changing_cfg):
        offset = reservation_overhead(0, cfg.mac)
        assert max_changes_in_packet(cfg.pu, offset, cfg.mac.packet_length) == 1
        assert max_changes_in_packet(changing_cfg.pu, offset, changing_cfg.mac.packet_length) == 2

    def test_quadrature_rejects_three_changes(self):
        cfg = default_scenario(mac__fragments_per_packet=4, mac__fragment_time="40ms",
                               pu__min_idle="40ms", pu__min_active="40ms")
        packet = packet_model(cfg, fixed_sensing(cfg))
        with pytest.raises(ValueError):
            quadrature_offsets(packet, cfg.pu, [reservation_overhead(0, cfg.mac)])

    def test_backends_agree_when_changes_occur(self, changing_cfg):
        cfg = changing_cfg
        packet = packet_model(cfg, ClosedFormSensing.calibrated(cfg))
        offsets = [reservation_overhead(i0, cfg.mac) for i0 in (0, 3)]
        exact = quadrature_offsets(packet, cfg.pu, offsets)
        for k, offset in enumerate(offsets):
            weights = np.zeros(len(offsets))
            weights[k] = 1.0
            mc = monte_carlo_offsets(packet, cfg.pu, offsets, weights, samples=200_000, seed=11, workers=1)
            se = np.std(mc.weighted_samples, ddof=1) / np.sqrt(len(mc.weighted_samples))
            assert abs(mc.values[k] - exact.values[k]) <= 3 * se + 1e-9

    def test_backends_agree_with_residual_first_idle(self):
        cfg = default_scenario(num_su_pairs=2, mac__contention_window=4, mac__fragments_per_packet=2,
                               options__first_idle_sampling="residual", pu__mean_idle="100ms")
        sensing = ClosedFormSensing.calibrated(cfg)
        exact = conditional_throughput(0, cfg, sensing, backend="quadrature")
        packet = packet_model(cfg, sensing)
        mc = monte_carlo_offsets(packet, cfg.pu, [reservation_overhead(0, cfg.mac)], [1.0],
                                 samples=200_000, seed=5, workers=1, first_idle="residual")
        p_idle = prob_idle(cfg.pu, cfg.options.prob_idle_uses_shift)
        se = p_idle * np.std(mc.weighted_samples, ddof=1) / np.sqrt(len(mc.weighted_samples))
        assert abs(p_idle * mc.values[0] - exact) <= 3 * se + 1e-9

    def test_monte_carlo_is_deterministic_across_workers(self, small_cfg):
        packet = packet_model(small_cfg, fixed_sensing(small_cfg))
        offsets = [reservation_overhead(i, small_cfg.mac) for i in range(4)]
        one = monte_carlo_offsets(packet, small_cfg.pu, offsets, samples=30_000, seed=3, workers=1)
        two = monte_carlo_offsets(packet, small_cfg.pu, offsets, samples=30_000, seed=3, workers=2)
        assert np.array_equal(one.values, two.values)

    def test_pattern_mass_totals(self, cfg):
        masses, total = pattern_mass(cfg, samples=50_000, seed=1)
        # a fresh first idle period outlasts the reservation
        assert total == pytest.approx(1.0)
        assert all(p.num_changes <= 1 for p in masses)
        exact, exact_total = pattern_mass(cfg, backend="quadrature")
        assert exact_total == pytest.approx(1.0, abs=1e-8)
        for pattern, mass in masses.items():
            assert mass == pytest.approx(exact[pattern], abs=5e-3)


class TestNormalizedThroughput:
    def test_always_idle_single_su(self):
        cfg = default_scenario(num_su_pairs=1, mac__contention_window=1, pu__mean_idle="1000000s")
        sensing = PerfectSensing(window=cfg.mac.fragment_time)
        report = normalized_throughput(cfg, sensing=sensing, samples=2_000, seed=1)
        K, T = cfg.mac.fragments_per_packet, cfg.mac.fragment_time
        rate = math.log2(1 + FragmentRates.for_config(cfg).snr_idle)
        p_idle = prob_idle(cfg.pu, cfg.options.prob_idle_uses_shift)
        expected = p_idle * K * T * rate / (reservation_overhead(0, cfg.mac) + K * T)
        assert report.normalized_throughput == pytest.approx(expected, rel=1e-9)
        assert report.normalized_throughput == pytest.approx(
            K * T * rate / (reservation_overhead(0, cfg.mac) + K * T), rel=1e-6)

    def test_sum_of_backoff_terms(self, small_cfg):
        report = normalized_throughput(small_cfg, samples=20_000, seed=2)
        assert len(report.per_backoff_terms) == small_cfg.mac.contention_window
        packet = small_cfg.mac.packet_length
        total = sum(t.success_prob * t.conditional_bits / (t.overhead + packet) for t in report.per_backoff_terms)
        assert report.normalized_throughput == pytest.approx(total)
        assert report.standard_error > 0
        assert report.calibration is not None

    def test_same_seed_same_result(self, small_cfg):
        a = normalized_throughput(small_cfg, samples=10_000, seed=4)
        b = normalized_throughput(small_cfg, samples=10_000, seed=4)
        assert a.normalized_throughput == b.normalized_throughput

    def test_conditional_throughput_matches_terms(self, small_cfg):
        sensing = ClosedFormSensing.calibrated(small_cfg)
        report = normalized_throughput(small_cfg, sensing=sensing, samples=10_000, seed=4)
        value = conditional_throughput(3, small_cfg, sensing, samples=10_000, seed=4)
        assert value == pytest.approx(report.per_backoff_terms[3].conditional_bits, rel=1e-12)

    def test_slot_outside_window_rejected(self, small_cfg):
        with pytest.raises(ValueError):
            conditional_throughput(8, small_cfg)

    def test_mismatched_sensing_window_rejected(self, small_cfg):
        with pytest.raises(ValueError):
            normalized_throughput(small_cfg, sensing=PerfectSensing(window=0.01), samples=100)

    def test_offset_spline_reproduces_cubics(self):
        offsets = np.linspace(0.0007, 0.021, 1024)
        nodes, basis = offset_basis(offsets, 24)
        assert basis.shape == (1024, 24)
        cubic = lambda x: 3 * x ** 3 - x ** 2 + 2 * x + 1  # noqa: E731
        assert np.allclose(basis @ cubic(nodes), cubic(offsets))

    def test_offset_basis_identity_when_exact(self):
        offsets = np.linspace(0, 1, 10)
        nodes, basis = offset_basis(offsets, 0)
        assert np.array_equal(nodes, offsets)
        assert np.array_equal(basis, np.eye(10))

    def test_spline_close_to_exact(self):
        cfg = default_scenario(num_su_pairs=5, mac__contention_window=128, mac__max_contention_window=128)
        sensing = ClosedFormSensing.calibrated(cfg)
        exact = normalized_throughput(cfg, sensing=sensing, samples=20_000, seed=9)
        spline = normalized_throughput(cfg, sensing=sensing, samples=20_000, seed=9, offset_nodes=16)
        assert spline.normalized_throughput == pytest.approx(exact.normalized_throughput, rel=1e-3)

    def test_perfect_sensing_bounds_calibrated_detector(self):
        small = default_scenario(num_su_pairs=5, mac__contention_window=16, mac__max_contention_window=16)
        real = normalized_throughput(small, samples=20_000, seed=6)
        ideal = normalized_throughput(small, sensing=PerfectSensing(window=small.mac.fragment_time),
                                      samples=20_000, seed=6)
        assert real.normalized_throughput < ideal.normalized_throughput

    def test_stronger_primary_never_helps(self, changing_cfg):
        values = []
        for p_db in (-30.0, -20.0, -10.0, 0.0):
            cfg = changing_cfg.with_updates(**{"radio.pu_received_power": 10 ** (p_db / 10)})
            report = normalized_throughput(cfg, sensing=fixed_sensing(cfg), samples=20_000, seed=11, workers=1)
            values.append(report.normalized_throughput)
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
        assert values[0] > values[-1]

    def test_longer_control_frames_cost_throughput(self):
        cfg = default_scenario(num_su_pairs=3, mac__contention_window=8, mac__max_contention_window=8,
                               pu__mean_idle="1000000s")
        slow = cfg.with_updates(**{key: 2 * value for key, value in (
            ("mac.mini_slot", cfg.mac.mini_slot), ("mac.sifs", cfg.mac.sifs), ("mac.difs", cfg.mac.difs),
            ("mac.rts", cfg.mac.rts), ("mac.cts", cfg.mac.cts),
        )})
        sensing = PerfectSensing(window=cfg.mac.fragment_time)
        base = normalized_throughput(cfg, sensing=sensing, samples=2_000, seed=1)
        doubled = normalized_throughput(slow, sensing=sensing, samples=2_000, seed=1)
        assert doubled.normalized_throughput < base.normalized_throughput
