import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import CalibrationError
from src.model.scenario import default_scenario
from src.schemas import PuEvent, SensingMode
from src.sensing import (
    ClosedFormSensing,
    PerfectSensing,
    SensingModel,
    avg_detection,
    busy_verdict_probability,
    calibrate_mode,
    calibrate_threshold,
    detection_01,
    detection_11,
    event_probabilities,
    false_alarm_00,
    false_alarm_10,
    pu_snr,
    roc_curve,
    sensing_noise,
)

FD, HD = SensingMode.FULL_DUPLEX, SensingMode.HALF_DUPLEX


def radio_for(tx_power_db: float, xi: float = 0.04):
    return default_scenario(radio__tx_power=f"{tx_power_db}dB", radio__max_tx_power="30dB",
                            radio__si_exponent=xi).radio


class TestErrorCurves:
    @given(
        st.floats(min_value=0.5, max_value=5.0),
        st.floats(min_value=1e-3, max_value=0.04),
        st.floats(min_value=0.0, max_value=30.0),
        st.sampled_from([FD, HD]),
    )
    @settings(max_examples=100, deadline=None)
    def test_endpoint_continuity(self, eps_factor, T, p_db, mode):
        radio = radio_for(p_db)
        eps = eps_factor * sensing_noise(radio, mode)
        f00 = false_alarm_00(eps, radio, T, mode)
        d11 = detection_11(eps, radio, T, mode)
        assert abs(false_alarm_10(eps, radio, T, 0.0, mode) - f00) <= 1e-12
        assert abs(false_alarm_10(eps, radio, T, T, mode) - d11) <= 1e-12
        assert abs(detection_01(eps, radio, T, 0.0, mode) - d11) <= 1e-12
        assert abs(detection_01(eps, radio, T, T, mode) - f00) <= 1e-12

    def test_detection_dominates_false_alarm(self, cfg):
        eps = np.linspace(0.8, 1.3, 50) * sensing_noise(cfg.radio, FD)
        assert np.all(detection_11(eps, cfg.radio, 0.018, FD) >= false_alarm_00(eps, cfg.radio, 0.018, FD))

    def test_curves_decrease_in_threshold(self, cfg):
        eps = np.linspace(0.9, 1.2, 40) * sensing_noise(cfg.radio, FD)
        for values in (false_alarm_00(eps, cfg.radio, 0.018, FD),
                       detection_11(eps, cfg.radio, 0.018, FD),
                       detection_01(eps, cfg.radio, 0.018, 0.009, FD)):
            assert np.all(np.diff(values) <= 0)

    def test_instant_outside_window_rejected(self, cfg):
        with pytest.raises(ValueError):
            false_alarm_10(1.0, cfg.radio, 0.018, 0.02)
        with pytest.raises(ValueError):
            detection_01(1.0, cfg.radio, 0.018, -1e-3)

    def test_hd_sees_noise_only(self, cfg):
        assert sensing_noise(cfg.radio, HD) == cfg.radio.noise_power
        assert pu_snr(cfg.radio, HD) == pytest.approx(0.01)
        interference = 0.4 * cfg.radio.tx_power ** 0.04
        assert pu_snr(cfg.radio, FD) == pytest.approx(0.01 / (1 + interference))

    def test_zero_power_fd_equals_hd(self):
        radio = default_scenario(radio__tx_power="0lin").radio
        eps = 1.02
        assert false_alarm_00(eps, radio, 0.018, FD) == pytest.approx(false_alarm_00(eps, radio, 0.018, HD))

    def test_dispatch(self, cfg):
        eps, T = 1.1, 0.018
        assert busy_verdict_probability(PuEvent.H00, eps, cfg.radio, T) == false_alarm_00(eps, cfg.radio, T)
        assert busy_verdict_probability(PuEvent.H11, eps, cfg.radio, T) == detection_11(eps, cfg.radio, T)
        assert busy_verdict_probability(PuEvent.H10, eps, cfg.radio, T, 0.005) == false_alarm_10(
            eps, cfg.radio, T, 0.005)
        assert busy_verdict_probability(PuEvent.H01, eps, cfg.radio, T, 0.005) == detection_01(
            eps, cfg.radio, T, 0.005)

    def test_roc_curve_is_monotone(self, cfg):
        thresholds = np.linspace(0.95, 1.1, 30) * sensing_noise(cfg.radio, FD)
        roc = roc_curve(cfg, 0.018, FD, thresholds)
        p_f = [f for f, _ in roc]
        p_d = [d for _, d in roc]
        assert len(roc) == 30
        assert np.all(np.diff(p_f) <= 0) and np.all(np.diff(p_d) <= 0)


class TestCalibration:
    @pytest.mark.parametrize("target", [0.5, 0.8, 0.9, 0.99])
    @pytest.mark.parametrize("mode", [FD, HD])
    def test_round_trip(self, cfg, target, mode):
        threshold, achieved = calibrate_mode(cfg, 0.018, cfg.radio.tx_power, target, mode)
        again = avg_detection(threshold, cfg.radio, cfg.pu, 0.018, mode, cfg.radio.tx_power)
        assert abs(again - target) <= 1e-8
        assert achieved == pytest.approx(again, abs=1e-12)

    def test_calibration_carries_both_thresholds(self, cfg):
        calibration = calibrate_threshold(cfg)
        assert calibration.fragment_time == cfg.mac.fragment_time
        assert calibration.tx_power == cfg.radio.tx_power
        # HD sees a lower noise floor
        assert calibration.threshold_hd < calibration.threshold_fd

    def test_higher_target_needs_lower_threshold(self, cfg):
        low = calibrate_threshold(cfg, target=0.6).threshold_fd
        high = calibrate_threshold(cfg, target=0.95).threshold_fd
        assert high < low

    def test_false_alarm_grows_with_self_interference(self):
        # at equal detection, more self-interference costs false alarms
        weak = default_scenario(radio__si_exponent=0.01)
        strong = default_scenario(radio__si_exponent=0.95)
        p_f = []
        for scenario in (weak, strong):
            calibration = calibrate_threshold(scenario)
            p_f.append(false_alarm_00(calibration.threshold_fd, scenario.radio, scenario.mac.fragment_time, FD))
        assert p_f[1] > p_f[0]

    def test_event_probabilities(self, cfg):
        p01, p11 = event_probabilities(cfg.pu, 0.018)
        assert 0 < p01 < p11 < 1

    def test_fragment_longer_than_evacuation_rejected(self, cfg):
        with pytest.raises(ValueError):
            avg_detection(1.1, cfg.radio, cfg.pu, 0.05)

    def test_unreachable_target_raises(self, cfg, monkeypatch):
        from config.settings import settings

        monkeypatch.setattr(settings, "CALIBRATION_MAX_EXPANSIONS", 0)
        with pytest.raises(CalibrationError):
            calibrate_mode(cfg, 1e-7, cfg.radio.tx_power, 0.999999, FD)


class TestSensingModels:
    def test_closed_form_matches_curves(self, cfg):
        sensing = ClosedFormSensing.calibrated(cfg)
        assert isinstance(sensing, SensingModel)
        T = cfg.mac.fragment_time
        assert sensing.busy_probability(PuEvent.H00, 0.0, FD) == pytest.approx(
            false_alarm_00(sensing.threshold_fd, cfg.radio, T, FD))
        assert sensing.busy_probability(PuEvent.H11, 0.0, HD) == pytest.approx(
            detection_11(sensing.threshold_hd, cfg.radio, T, HD))

    def test_half_duplex_only_uses_its_window(self, cfg):
        sensing = ClosedFormSensing.half_duplex_only(cfg, 2e-3)
        assert sensing.window == 2e-3
        p = avg_detection(sensing.threshold_hd, cfg.radio, cfg.pu, 2e-3, HD)
        assert p == pytest.approx(cfg.target_detection_prob, abs=1e-8)

    def test_perfect_sensing(self):
        sensing = PerfectSensing(window=0.018)
        assert isinstance(sensing, SensingModel)
        assert sensing.busy_probability(PuEvent.H00) == 0.0
        assert sensing.busy_probability(PuEvent.H01, 0.01) == 1.0
        assert sensing.busy_probability(PuEvent.H10, 0.01) == 0.0
        assert np.all(sensing.busy_probability(PuEvent.H11, np.zeros(3)) == 1.0)


def test_higher_power_raises_fd_threshold():
    low = calibrate_threshold(default_scenario(radio__tx_power="5dB", radio__si_exponent=0.5))
    high = calibrate_threshold(default_scenario(radio__tx_power="20dB", radio__si_exponent=0.5))
    assert high.threshold_fd > low.threshold_fd
    assert high.threshold_hd == pytest.approx(low.threshold_hd)
