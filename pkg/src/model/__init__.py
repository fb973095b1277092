"""
Scenario parameters, unit handling and the PU activity distributions
"""

from .distributions import (
    gaussian_tail,
    prob_busy,
    prob_idle,
    residual_exp_pdf,
    residual_exp_sample,
    residual_exp_survival,
    shifted_exp_pdf,
    shifted_exp_sample,
    shifted_exp_survival,
)
from .scenario import default_scenario, load_scenario, scenario_to_flat, scenario_to_text
from .units import db_to_linear, linear_to_db, parse_duration, parse_power


def self_interference(radio, tx_power=None) -> float:
    """I = zeta * P_s^xi for the given radio (0 when P_s = 0)."""
    return radio.self_interference(tx_power)


__all__ = [
    "gaussian_tail",
    "prob_busy",
    "prob_idle",
    "residual_exp_pdf",
    "residual_exp_sample",
    "residual_exp_survival",
    "shifted_exp_pdf",
    "shifted_exp_sample",
    "shifted_exp_survival",
    "default_scenario",
    "load_scenario",
    "scenario_to_flat",
    "scenario_to_text",
    "db_to_linear",
    "linear_to_db",
    "parse_duration",
    "parse_power",
    "self_interference",
]
