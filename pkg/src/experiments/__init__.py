"""
Experiment driver: sweeps, presets, cross-validation and scenario checks
"""

from .crossval import crossval, crossval_frame, crossval_grid
from .reporting import ResultTable, optimization_table, result_columns
from .sweep import parse_sweep_values, preset_sweeps, run_experiment, run_preset, run_sweep
from .validation import derived_quantities, format_report, validate

__all__ = [
    "crossval",
    "crossval_frame",
    "crossval_grid",
    "ResultTable",
    "optimization_table",
    "result_columns",
    "parse_sweep_values",
    "preset_sweeps",
    "run_experiment",
    "run_preset",
    "run_sweep",
    "derived_quantities",
    "format_report",
    "validate",
]
