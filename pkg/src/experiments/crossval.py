"""
Analysis against simulation on shared calibrations.
"""

from itertools import product
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd

from config.settings import settings
from src.analysis import normalized_throughput
from src.model.scenario import SCENARIO_FIELDS, default_scenario, scenario_to_flat
from src.schemas import CrossValidation, NetworkConfig
from src.sensing import ClosedFormSensing
from src.simulator import run_fd, run_replications

logger = logging.getLogger(__name__)


def crossval(cfg: NetworkConfig, seeds: Optional[Sequence[int]] = None, horizon: float = 100.0,
             workers: Optional[int] = None, samples: Optional[int] = None) -> CrossValidation:
    """
    Compare analytical NT with the FD simulator at one scenario.

    Both sides use the same calibrated thresholds. The simulator standard error is
    the standard error of the mean over independent replications, one per seed.

    Args:
        cfg: Scenario
        seeds: One seed per replication (SEED .. SEED+4 by default)
        horizon: Simulated time per replication (s)
        workers: Replications run in parallel (WORKERS)
        samples: Monte Carlo samples of the analysis (ANALYSIS_SAMPLES)
    """
    seeds = list(seeds) if seeds else [settings.SEED + r for r in range(5)]
    sensing = ClosedFormSensing.calibrated(cfg)
    report = normalized_throughput(cfg, sensing=sensing, samples=samples, seed=seeds[0])

    runs = run_replications(lambda s: run_fd(cfg, sensing, horizon=horizon, seed=s), seeds, workers)
    nts = np.array([run.normalized_throughput for run in runs])
    sim_se = float(np.std(nts, ddof=1) / np.sqrt(len(nts))) if len(nts) > 1 else 0.0
    sim_nt = float(nts.mean())

    analysis_nt = report.normalized_throughput
    relative = abs(sim_nt - analysis_nt) / analysis_nt if analysis_nt > 0 else float("inf")
    result = CrossValidation(
        analysis_throughput=analysis_nt,
        analysis_standard_error=report.standard_error,
        simulated_throughput=sim_nt,
        simulated_standard_error=sim_se,
        replications=len(runs),
        relative_difference=relative,
        combined_standard_error=float(np.hypot(report.standard_error, sim_se)),
    )
    logger.info(
        f"Cross-validation n0={cfg.num_su_pairs} K={cfg.mac.fragments_per_packet} "
        f"xi={cfg.radio.si_exponent}: analysis {analysis_nt:.5f}, simulation {sim_nt:.5f} "
        f"({relative:.2%})"
    )
    return result


def crossval_grid(base: Optional[NetworkConfig] = None) -> List[Tuple[str, NetworkConfig]]:
    """Scenarios spanning n0 in {1, 5, 40}, K in {2, 4} and xi in {0.01, 0.95}."""
    base = base or default_scenario()
    grid = []
    for n0, K, xi in product((1, 5, 40), (2, 4), (0.01, 0.95)):
        cfg = base.with_updates(**{
            "num_su_pairs": n0,
            "mac.fragments_per_packet": K,
            "radio.si_exponent": xi,
        })
        grid.append((f"n0={n0} K={K} xi={xi}", cfg))
    return grid


def crossval_frame(results: Sequence[Tuple[str, NetworkConfig, CrossValidation]]) -> pd.DataFrame:
    """One row per scenario: label, provenance, both estimates and the agreement flag."""
    rows = []
    for label, cfg, result in results:
        row = {"label": label}
        row.update(scenario_to_flat(cfg))
        row.update(result.model_dump())
        row["agrees"] = result.agrees
        rows.append(row)
    columns = ["label"] + list(SCENARIO_FIELDS) + list(CrossValidation.model_fields) + ["agrees"]
    return pd.DataFrame(rows, columns=columns)
