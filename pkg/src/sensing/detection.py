"""
Closed-form energy-detection error probabilities for the four PU events.

Every curve is Q(argument) with Q the standard Gaussian tail. The FD curves see
noise plus self-interference N_0 + I; the HD curves see N_0 only.
"""

from typing import Optional, Union

import numpy as np

from src.model.distributions import gaussian_tail
from src.schemas import PuEvent, RadioConfig, SensingMode

ArrayLike = Union[float, np.ndarray]

# Slack for instants that land on a window edge through floating-point sums
_EDGE_SLACK = 1e-12


def sensing_noise(radio: RadioConfig, mode: SensingMode, tx_power: Optional[float] = None) -> float:
    """Noise floor of the detector: N_0 + I under FD sensing, N_0 under HD sensing."""
    if SensingMode(mode) is SensingMode.HALF_DUPLEX:
        return radio.noise_power
    return radio.noise_power + radio.self_interference(tx_power)


def pu_snr(radio: RadioConfig, mode: SensingMode, tx_power: Optional[float] = None) -> float:
    """gamma_PS = P_p / (N_0 + I) for FD, gamma_PS^h = P_p / N_0 for HD."""
    return radio.pu_received_power / sensing_noise(radio, mode, tx_power)


def _check_window(T: float) -> None:
    if not T > 0:
        raise ValueError(f"sensing window must be positive, got {T}")


def _check_instant(t: ArrayLike, T: float) -> np.ndarray:
    t_arr = np.asarray(t, dtype=float)
    slack = _EDGE_SLACK * T
    if np.any(t_arr < -slack) or np.any(t_arr > T + slack):
        raise ValueError(f"change instant must lie in [0, {T}]")
    return np.clip(t_arr, 0.0, T)


def _scalar(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def false_alarm_00(threshold: ArrayLike, radio: RadioConfig, T: float,
                   mode: SensingMode = SensingMode.FULL_DUPLEX,
                   tx_power: Optional[float] = None) -> ArrayLike:
    """Busy verdict while the PU stays idle over the whole window."""
    _check_window(T)
    noise = sensing_noise(radio, mode, tx_power)
    eps = np.asarray(threshold, dtype=float)
    return gaussian_tail((eps / noise - 1.0) * np.sqrt(radio.sampling_frequency * T))


def detection_11(threshold: ArrayLike, radio: RadioConfig, T: float,
                 mode: SensingMode = SensingMode.FULL_DUPLEX,
                 tx_power: Optional[float] = None) -> ArrayLike:
    """Busy verdict while the PU stays active over the whole window."""
    _check_window(T)
    noise = sensing_noise(radio, mode, tx_power)
    gamma = radio.pu_received_power / noise
    eps = np.asarray(threshold, dtype=float)
    arg = (eps / noise - gamma - 1.0) * np.sqrt(radio.sampling_frequency * T) / (gamma + 1.0)
    return gaussian_tail(arg)


def false_alarm_10(threshold: ArrayLike, radio: RadioConfig, T: float, t: ArrayLike,
                   mode: SensingMode = SensingMode.FULL_DUPLEX,
                   tx_power: Optional[float] = None) -> ArrayLike:
    """
    Busy verdict when the PU is active on [0, t) and idle on [t, T].

    Reduces to false_alarm_00 at t = 0 and to detection_11 at t = T.

    Args:
        threshold: Detection threshold epsilon (linear)
        radio: Radio parameters
        T: Sensing window (s)
        t: Instant of the PU change inside the window, scalar or array
        mode: FD or HD sensing
        tx_power: Override for P_s (defaults to radio.tx_power)

    Raises:
        ValueError: if t lies outside [0, T]
    """
    _check_window(T)
    t_arr = _check_instant(t, T)
    noise = sensing_noise(radio, mode, tx_power)
    gamma = radio.pu_received_power / noise
    eps = np.asarray(threshold, dtype=float)
    frac = t_arr / T
    numerator = (eps / noise - frac * gamma - 1.0) * np.sqrt(radio.sampling_frequency * T)
    spread = np.sqrt(frac * (gamma + 1.0) ** 2 + 1.0 - frac)
    return _scalar(np.asarray(gaussian_tail(numerator / spread)))


def detection_01(threshold: ArrayLike, radio: RadioConfig, T: float, t: ArrayLike,
                 mode: SensingMode = SensingMode.FULL_DUPLEX,
                 tx_power: Optional[float] = None) -> ArrayLike:
    """
    Busy verdict when the PU is idle on [0, t) and active on [t, T].

    Reduces to detection_11 at t = 0 and to false_alarm_00 at t = T.
    """
    _check_window(T)
    t_arr = _check_instant(t, T)
    noise = sensing_noise(radio, mode, tx_power)
    gamma = radio.pu_received_power / noise
    eps = np.asarray(threshold, dtype=float)
    busy_frac = (T - t_arr) / T
    numerator = (eps / noise - busy_frac * gamma - 1.0) * np.sqrt(radio.sampling_frequency * T)
    spread = np.sqrt(busy_frac * (gamma + 1.0) ** 2 + t_arr / T)
    return _scalar(np.asarray(gaussian_tail(numerator / spread)))


def busy_verdict_probability(event: PuEvent, threshold: float, radio: RadioConfig, T: float,
                             t: ArrayLike = 0.0, mode: SensingMode = SensingMode.FULL_DUPLEX,
                             tx_power: Optional[float] = None) -> ArrayLike:
    """Dispatch to the curve of ``event``; ``t`` is ignored for H00 and H11."""
    event = PuEvent(event)
    if event is PuEvent.H00:
        return false_alarm_00(threshold, radio, T, mode, tx_power)
    if event is PuEvent.H11:
        return detection_11(threshold, radio, T, mode, tx_power)
    if event is PuEvent.H10:
        return false_alarm_10(threshold, radio, T, t, mode, tx_power)
    return detection_01(threshold, radio, T, t, mode, tx_power)
