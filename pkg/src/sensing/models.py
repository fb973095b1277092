"""
Sensing models consumed by the analysis engine and the simulator
"""

from dataclasses import dataclass
from typing import Optional, Protocol, Union, runtime_checkable

import numpy as np

from src.schemas import NetworkConfig, PuEvent, RadioConfig, SensingCalibration, SensingMode
from src.sensing.calibration import calibrate_mode, calibrate_threshold
from src.sensing.detection import busy_verdict_probability

ArrayLike = Union[float, np.ndarray]


@runtime_checkable
class SensingModel(Protocol):
    """Probability of a busy verdict for a fragment of a given PU event."""

    window: float

    def busy_probability(self, event: PuEvent, t: ArrayLike, mode: SensingMode) -> ArrayLike:
        ...


@dataclass(frozen=True)
class ClosedFormSensing:
    """Energy detection at calibrated thresholds, one per sensing mode."""

    radio: RadioConfig
    window: float
    threshold_fd: float
    threshold_hd: float
    tx_power: float
    calibration: Optional[SensingCalibration] = None

    @classmethod
    def from_calibration(cls, cfg: NetworkConfig, calibration: SensingCalibration) -> "ClosedFormSensing":
        return cls(
            radio=cfg.radio,
            window=calibration.fragment_time,
            threshold_fd=calibration.threshold_fd,
            threshold_hd=calibration.threshold_hd,
            tx_power=calibration.tx_power,
            calibration=calibration,
        )

    @classmethod
    def calibrated(cls, cfg: NetworkConfig, T: Optional[float] = None,
                   tx_power: Optional[float] = None) -> "ClosedFormSensing":
        """Calibrate both modes for (T, P_s) and wrap the result."""
        return cls.from_calibration(cfg, calibrate_threshold(cfg, T, tx_power))

    @classmethod
    def half_duplex_only(cls, cfg: NetworkConfig, sensing_time: float) -> "ClosedFormSensing":
        """HD detector with its own sensing window (periodic-sensing baseline)."""
        threshold, _ = calibrate_mode(
            cfg, sensing_time, cfg.radio.tx_power, cfg.target_detection_prob, SensingMode.HALF_DUPLEX
        )
        return cls(
            radio=cfg.radio,
            window=sensing_time,
            threshold_fd=threshold,
            threshold_hd=threshold,
            tx_power=cfg.radio.tx_power,
        )

    def busy_probability(self, event: PuEvent, t: ArrayLike = 0.0,
                         mode: SensingMode = SensingMode.FULL_DUPLEX) -> ArrayLike:
        mode = SensingMode(mode)
        threshold = self.threshold_fd if mode is SensingMode.FULL_DUPLEX else self.threshold_hd
        return busy_verdict_probability(event, threshold, self.radio, self.window, t, mode, self.tx_power)


@dataclass(frozen=True)
class PerfectSensing:
    """Error-free detector: the verdict equals the PU state at the end of the window."""

    window: float

    def busy_probability(self, event: PuEvent, t: ArrayLike = 0.0,
                         mode: SensingMode = SensingMode.FULL_DUPLEX) -> ArrayLike:
        value = 1.0 if PuEvent(event).ends_active else 0.0
        if np.ndim(t) == 0:
            return value
        return np.full(np.shape(t), value)
