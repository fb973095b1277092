"""
Energy-detection error model and threshold calibration
"""

from src.schemas import SensingMode

from .calibration import (
    avg_detection,
    avg_detection_01,
    calibrate_mode,
    calibrate_threshold,
    event_probabilities,
    roc_curve,
)
from .detection import (
    busy_verdict_probability,
    detection_01,
    detection_11,
    false_alarm_00,
    false_alarm_10,
    pu_snr,
    sensing_noise,
)
from .models import ClosedFormSensing, PerfectSensing, SensingModel

__all__ = [
    "SensingMode",
    "avg_detection",
    "avg_detection_01",
    "calibrate_mode",
    "calibrate_threshold",
    "event_probabilities",
    "roc_curve",
    "busy_verdict_probability",
    "detection_01",
    "detection_11",
    "false_alarm_00",
    "false_alarm_10",
    "pu_snr",
    "sensing_noise",
    "ClosedFormSensing",
    "PerfectSensing",
    "SensingModel",
]
