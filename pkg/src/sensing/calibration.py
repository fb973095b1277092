"""
Average detection probability and threshold calibration against the detection target
"""

from typing import Iterable, List, Optional, Tuple
import logging
import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

from config.settings import settings
from src.errors import CalibrationError, IntegrationError
from src.model.distributions import prob_busy, prob_idle
from src.schemas import (
    NetworkConfig,
    PuActivityModel,
    RadioConfig,
    RocPoint,
    SensingCalibration,
    SensingMode,
)
from src.sensing.detection import detection_01, detection_11, false_alarm_00, pu_snr, sensing_noise

logger = logging.getLogger(__name__)


def event_probabilities(pu: PuActivityModel, T: float, uses_shift: bool = True) -> Tuple[float, float]:
    """
    Probabilities of the two sensing events that involve PU activity.

    Returns:
        (P(H01), P(H11)) with P(H01) = P(H0)(1 - exp(-T/mean_idle)) and
        P(H11) = P(H1) exp(-T/mean_active)
    """
    p01 = prob_idle(pu, uses_shift) * -math.expm1(-T / pu.mean_idle)
    p11 = prob_busy(pu, uses_shift) * math.exp(-T / pu.mean_active)
    return p01, p11


def truncated_idle_density(t, pu: PuActivityModel, T: float):
    """Density of the idle-to-active instant on [0, T], given it falls in the window."""
    mass = -math.expm1(-T / pu.mean_idle)
    return np.exp(-np.asarray(t, dtype=float) / pu.mean_idle) / (pu.mean_idle * mass)


def avg_detection_01(threshold: float, radio: RadioConfig, pu: PuActivityModel, T: float,
                     mode: SensingMode = SensingMode.FULL_DUPLEX,
                     tx_power: Optional[float] = None) -> float:
    """
    Detection probability of the idle-to-active event averaged over the change instant.

    Raises:
        IntegrationError: if quadrature misses QUAD_ABS_TOL by more than a factor of 100
    """
    if T > pu.evacuation_time:
        raise ValueError(f"fragment time {T} exceeds evacuation time {pu.evacuation_time}")

    def integrand(t: float) -> float:
        return detection_01(threshold, radio, T, t, mode, tx_power) * truncated_idle_density(t, pu, T)

    value, error = quad(integrand, 0.0, T, epsabs=settings.QUAD_ABS_TOL, limit=200)
    if error > 100 * settings.QUAD_ABS_TOL:
        raise IntegrationError("average idle-to-active detection did not converge", error)
    if error > settings.QUAD_ABS_TOL:
        logger.warning(f"avg_detection_01 error estimate {error:.2e} above tolerance")
    return float(value)


def avg_detection(threshold: float, radio: RadioConfig, pu: PuActivityModel, T: float,
                  mode: SensingMode = SensingMode.FULL_DUPLEX,
                  tx_power: Optional[float] = None, uses_shift: bool = True) -> float:
    """Mixture of P_d^11 and the averaged P_d^01, weighted by P(H11) and P(H01)."""
    p01, p11 = event_probabilities(pu, T, uses_shift)
    d11 = detection_11(threshold, radio, T, mode, tx_power)
    if p01 == 0.0:
        return float(d11)
    d01 = avg_detection_01(threshold, radio, pu, T, mode, tx_power)
    return float((d11 * p11 + d01 * p01) / (p11 + p01))


def threshold_bracket(radio: RadioConfig, T: float, mode: SensingMode,
                      tx_power: Optional[float] = None) -> Tuple[float, float]:
    """Initial bracket covering +/- 10 standard deviations of the energy statistic."""
    noise = sensing_noise(radio, mode, tx_power)
    gamma = pu_snr(radio, mode, tx_power)
    spread = 10.0 / math.sqrt(radio.sampling_frequency * T)
    low = noise * (1.0 - spread)
    high = noise * (1.0 + gamma) * (1.0 + spread)
    if low <= 0:
        low = noise * 1e-3
    return low, high


def calibrate_mode(cfg: NetworkConfig, T: float, tx_power: float, target: float,
                   mode: SensingMode) -> Tuple[float, float]:
    """
    Threshold meeting the average-detection target with equality for one sensing mode.

    Returns:
        (threshold, achieved average detection)

    Raises:
        CalibrationError: if the target cannot be bracketed
    """
    if not 0 < target < 1:
        raise ValueError(f"detection target must lie in (0, 1), got {target}")
    radio, pu = cfg.radio, cfg.pu
    uses_shift = cfg.options.prob_idle_uses_shift

    def excess(eps: float) -> float:
        return avg_detection(eps, radio, pu, T, mode, tx_power, uses_shift) - target

    low, high = threshold_bracket(radio, T, mode, tx_power)
    expansions = 0
    # avg_detection decreases in the threshold
    while excess(low) < 0:
        low /= 2.0
        expansions += 1
        if expansions > settings.CALIBRATION_MAX_EXPANSIONS:
            raise CalibrationError(
                f"{mode.value.upper()} detection target {target} unreachable below threshold {low:.3e}",
                fragment_time=T, tx_power=tx_power,
            )
    while excess(high) > 0:
        high *= 2.0
        expansions += 1
        if expansions > settings.CALIBRATION_MAX_EXPANSIONS:
            raise CalibrationError(
                f"{mode.value.upper()} detection target {target} unreachable above threshold {high:.3e}",
                fragment_time=T, tx_power=tx_power,
            )

    threshold = bisect(excess, low, high, xtol=1e-15 * high, maxiter=400)
    achieved = excess(threshold) + target
    if abs(achieved - target) > settings.CALIBRATION_TOL:
        logger.warning(
            f"{mode.value.upper()} calibration residual {abs(achieved - target):.2e} "
            f"above tolerance at T={T:.4g}s"
        )
    return float(threshold), float(achieved)


def calibrate_threshold(cfg: NetworkConfig, T: Optional[float] = None, tx_power: Optional[float] = None,
                        target: Optional[float] = None) -> SensingCalibration:
    """
    Calibrate one FD and one HD threshold for the given fragment time and transmit power.

    Args:
        cfg: Scenario
        T: Fragment (sensing) time; defaults to cfg.mac.fragment_time
        tx_power: SU transmit power; defaults to cfg.radio.tx_power
        target: Average detection target; defaults to cfg.target_detection_prob

    Returns:
        SensingCalibration with both thresholds and the achieved averages
    """
    T = cfg.mac.fragment_time if T is None else T
    tx_power = cfg.radio.tx_power if tx_power is None else tx_power
    target = cfg.target_detection_prob if target is None else target

    threshold_fd, achieved_fd = calibrate_mode(cfg, T, tx_power, target, SensingMode.FULL_DUPLEX)
    threshold_hd, achieved_hd = calibrate_mode(cfg, T, tx_power, target, SensingMode.HALF_DUPLEX)
    logger.debug(
        f"Calibrated T={T * 1e3:.3f}ms P_s={tx_power:.4g}: "
        f"eps_fd={threshold_fd:.6g} eps_hd={threshold_hd:.6g}"
    )
    return SensingCalibration(
        threshold_fd=threshold_fd,
        threshold_hd=threshold_hd,
        fragment_time=T,
        tx_power=tx_power,
        achieved_avg_detection_fd=achieved_fd,
        achieved_avg_detection_hd=achieved_hd,
    )


def roc_curve(cfg: NetworkConfig, T: float, mode: SensingMode,
              thresholds: Iterable[float]) -> List[RocPoint]:
    """(P_f^00, P_d^11) pairs over a threshold grid."""
    eps = np.asarray(list(thresholds), dtype=float)
    p_f = np.atleast_1d(false_alarm_00(eps, cfg.radio, T, mode))
    p_d = np.atleast_1d(detection_11(eps, cfg.radio, T, mode))
    return [(float(f), float(d)) for f, d in zip(p_f, p_d)]
