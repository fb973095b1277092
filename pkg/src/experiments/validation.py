"""
Scenario validation: every violated invariant, then the derived quantities of a valid scenario.
"""

from pathlib import Path
from typing import Dict, Optional, Union
import logging

from src.analysis import reservation_overhead
from src.errors import CalibrationError, ConfigurationError, IntegrationError
from src.model.distributions import prob_busy, prob_idle
from src.model.scenario import build_network_config, collect_violations, parse_scenario_values, read_scenario_file
from src.schemas import NetworkConfig, SensingMode, ValidationReport
from src.sensing import calibrate_threshold, false_alarm_00, pu_snr
from src.throughput import FragmentRates

logger = logging.getLogger(__name__)


def derived_quantities(cfg: NetworkConfig) -> Dict[str, float]:
    """
    Quantities a scenario implies: self-interference, PU SINRs, P(H0) and the calibrated thresholds.

    Raises:
        CalibrationError: if the detection target cannot be met
    """
    radio, T = cfg.radio, cfg.mac.fragment_time
    rates = FragmentRates.for_config(cfg)
    calibration = calibrate_threshold(cfg)
    return {
        "self_interference": radio.self_interference(),
        "gamma_ps_fd": pu_snr(radio, SensingMode.FULL_DUPLEX),
        "gamma_ps_hd": pu_snr(radio, SensingMode.HALF_DUPLEX),
        "gamma_s1": rates.snr_idle,
        "gamma_s2": rates.snr_busy,
        "prob_idle": prob_idle(cfg.pu, cfg.options.prob_idle_uses_shift),
        "prob_busy": prob_busy(cfg.pu, cfg.options.prob_idle_uses_shift),
        "packet_length": cfg.mac.packet_length,
        "overhead_min": reservation_overhead(0, cfg.mac),
        "threshold_fd": calibration.threshold_fd,
        "threshold_hd": calibration.threshold_hd,
        "false_alarm_fd": float(false_alarm_00(calibration.threshold_fd, radio, T, SensingMode.FULL_DUPLEX)),
        "false_alarm_hd": float(false_alarm_00(calibration.threshold_hd, radio, T, SensingMode.HALF_DUPLEX)),
        "avg_detection_fd": calibration.achieved_avg_detection_fd,
        "avg_detection_hd": calibration.achieved_avg_detection_hd,
    }


def validate(config_path: Optional[Union[str, Path]] = None) -> ValidationReport:
    """
    Check a scenario file without running any experiment.

    Every violated invariant is listed; derived quantities are only computed for a
    scenario with no violations.
    """
    source = str(config_path) if config_path is not None else "defaults"
    try:
        raw = read_scenario_file(config_path) if config_path is not None else {}
    except ConfigurationError as e:
        return ValidationReport(source=source, violations=e.violations)

    parsed, problems = parse_scenario_values(raw)
    problems.extend(collect_violations(parsed))
    if problems:
        logger.warning(f"{source}: {len(problems)} violated constraint(s)")
        return ValidationReport(source=source, violations=problems)

    try:
        cfg = build_network_config(parsed)
        derived = derived_quantities(cfg)
    except ConfigurationError as e:
        return ValidationReport(source=source, violations=e.violations)
    except (CalibrationError, IntegrationError) as e:
        return ValidationReport(source=source, violations=[f"calibration: {e}"])
    logger.info(f"{source}: all checks passed")
    return ValidationReport(source=source, derived=derived)


def format_report(report: ValidationReport) -> str:
    lines = ["=" * 60, f"SCENARIO CHECK: {report.source}", "=" * 60]
    if report.ok:
        lines.append("✅ All constraints satisfied\n")
        lines.append("Derived quantities:")
        for name, value in report.derived.items():
            lines.append(f"  {name:<20} {value:.6g}")
    else:
        lines.append(f"❌ {len(report.violations)} violated constraint(s):")
        lines.extend(f"  - {violation}" for violation in report.violations)
    lines.append("=" * 60)
    return "\n".join(lines)
