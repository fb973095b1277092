"""
Result tables: one row per sweep point per mode, full provenance, RFC-4180 CSV output.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import logging

import numpy as np
import pandas as pd

from src.model.scenario import SCENARIO_FIELDS, scenario_to_flat
from src.schemas import NetworkConfig, OptimizationResult, SimStats, ThroughputReport

logger = logging.getLogger(__name__)

LEADING_COLUMNS = ["curve", "point", "swept_parameter", "swept_value", "mode"]
RESULT_COLUMNS = [
    "feasible",
    "normalized_throughput",
    "standard_error",
    "integration_error_estimate",
    "curve_max",
    "replications",
    "threshold_fd",
    "threshold_hd",
    "best_w",
    "best_fragment_time",
    "best_tx_power",
    "sensing_time",
    "collisions",
    "missed_detections",
    "false_alarm_stalls",
    "pu_interference_time",
]


def result_columns(wall_time: bool = False) -> List[str]:
    columns = LEADING_COLUMNS + list(SCENARIO_FIELDS) + RESULT_COLUMNS
    return columns + ["wall_time"] if wall_time else columns


class ResultTable:
    """Buffered experiment rows, written in insertion order."""

    def __init__(self, wall_time: bool = False):
        self.wall_time = wall_time
        self.rows: List[Dict[str, Any]] = []

    def add_row(self, cfg: NetworkConfig, mode: str, values: Dict[str, Any], curve: str = "",
                point: int = 0, swept_parameter: str = "", swept_value: Optional[float] = None,
                wall_time: Optional[float] = None) -> Dict[str, Any]:
        row: Dict[str, Any] = {
            "curve": curve,
            "point": point,
            "swept_parameter": swept_parameter,
            "swept_value": swept_value,
            "mode": mode,
        }
        row.update(scenario_to_flat(cfg))
        row["feasible"] = True
        row.update(values)
        if self.wall_time:
            row["wall_time"] = wall_time
        self.rows.append(row)
        return row

    def extend(self, other: "ResultTable") -> None:
        self.rows.extend(other.rows)

    def mark_curve_maxima(self) -> None:
        """Flag the largest-NT point of each (curve, mode)."""
        best: Dict[tuple, int] = {}
        for i, row in enumerate(self.rows):
            row["curve_max"] = False
            key = (row["curve"], row["mode"])
            value = row.get("normalized_throughput")
            if not row["feasible"] or value is None or not np.isfinite(value):
                continue
            if key not in best or value > self.rows[best[key]]["normalized_throughput"]:
                best[key] = i
        for i in best.values():
            self.rows[i]["curve_max"] = True

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=result_columns(self.wall_time))

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_dataframe().to_csv(path, index=False, lineterminator="\n", float_format="%.12g")
        logger.info(f"Wrote {len(self.rows)} rows to {path}")
        return path

    def generate_report(self) -> str:
        """Human-readable summary of the best point per curve and mode."""
        report = ["=" * 60]
        report.append("EXPERIMENT REPORT")
        report.append("=" * 60)
        report.append(f"\nRows: {len(self.rows)}\n")
        for row in self.rows:
            if not row.get("curve_max"):
                continue
            label = row["curve"] or "sweep"
            report.append(
                f"{label} [{row['mode']}]: max NT {row['normalized_throughput']:.4f} "
                f"at {row['swept_parameter']}={row['swept_value']}"
            )
        report.append("\n" + "=" * 60)
        return "\n".join(report)


def analysis_values(report: ThroughputReport) -> Dict[str, Any]:
    values = {
        "normalized_throughput": report.normalized_throughput,
        "standard_error": report.standard_error,
        "integration_error_estimate": report.integration_error_estimate,
    }
    if report.calibration is not None:
        values["threshold_fd"] = report.calibration.threshold_fd
        values["threshold_hd"] = report.calibration.threshold_hd
    return values


def simulation_values(runs: List[SimStats], sensing_time: Optional[float] = None) -> Dict[str, Any]:
    """Mean NT over replications with the standard error of the mean."""
    nts = np.array([run.normalized_throughput for run in runs])
    standard_error = float(np.std(nts, ddof=1) / np.sqrt(len(nts))) if len(nts) > 1 else 0.0
    return {
        "normalized_throughput": float(nts.mean()),
        "standard_error": standard_error,
        "replications": len(runs),
        "sensing_time": sensing_time,
        "collisions": int(sum(run.collisions for run in runs)),
        "missed_detections": int(sum(run.missed_detections for run in runs)),
        "false_alarm_stalls": int(sum(run.false_alarm_stalls for run in runs)),
        "pu_interference_time": float(sum(run.pu_interference_time for run in runs)),
    }


def optimization_values(result: OptimizationResult) -> Dict[str, Any]:
    values = {
        "normalized_throughput": result.best_throughput,
        "best_w": result.best_w,
        "best_fragment_time": result.best_fragment_time,
        "best_tx_power": result.best_tx_power,
    }
    if result.final_report is not None:
        values["standard_error"] = result.final_report.standard_error
    return values


def optimization_table(cfg: NetworkConfig, result: OptimizationResult) -> ResultTable:
    """One ``optimize_trace`` row per evaluated (W, T, P_s), then the ``optimize`` row of the optimum."""
    table = ResultTable()
    for i, point in enumerate(result.search_trace):
        table.add_row(cfg, "optimize_trace", {
            "mac.contention_window": point.contention_window,
            "mac.fragment_time": point.fragment_time,
            "radio.tx_power": point.tx_power,
            "feasible": point.feasible,
            "normalized_throughput": point.throughput if point.feasible else np.nan,
        }, point=i)
    best = cfg.with_updates(**{
        "mac.contention_window": result.best_w,
        "mac.fragment_time": result.best_fragment_time,
        "radio.tx_power": result.best_tx_power,
    })
    table.add_row(best, "optimize", optimization_values(result), point=len(result.search_trace))
    table.mark_curve_maxima()
    return table
