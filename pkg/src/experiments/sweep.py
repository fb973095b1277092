"""
Parameter sweeps over a scenario: analysis, simulation and optimizer points, one CSV.
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import logging
import time

from tqdm import tqdm

from config.settings import settings
from src.analysis import normalized_throughput
from src.errors import CalibrationError, ConfigurationError, ExperimentError, FdMacError
from src.model.scenario import SCENARIO_FIELDS, canonical_key, load_scenario, read_scenario_file
from src.model.units import db_to_linear
from src.optimizer import ThroughputObjective, optimize
from src.schemas import NetworkConfig, SimStats, SweepSpec
from src.sensing import ClosedFormSensing
from src.simulator import run_fd, run_hd, run_replications

from .reporting import ResultTable, analysis_values, optimization_values, simulation_values

logger = logging.getLogger(__name__)

# HD sensing durations tried per point, as fractions of T
HD_SENSING_FRACTIONS = (0.02, 0.05, 0.1, 0.2, 0.3, 0.5)
PROTOCOLS = ("fd", "hd")
# Row values of a point whose detection target cannot be met
INFEASIBLE = {"normalized_throughput": 0.0, "feasible": False}


def point_label(sweep: SweepSpec, index: int, value: Optional[float], curve: str = "") -> str:
    label = f"#{index} {sweep.swept_parameter}={value}"
    return f"{curve} {label}" if curve else label


def sweep_configs(config_path: Optional[Union[str, Path]], sweep: SweepSpec) -> List[NetworkConfig]:
    """
    One validated scenario per sweep value.

    Raises:
        ExperimentError: naming the first point whose scenario is invalid
    """
    try:
        key = canonical_key(sweep.swept_parameter)
    except KeyError as e:
        raise ConfigurationError([f"swept parameter: {e.args[0]}"]) from e
    base = read_scenario_file(config_path) if config_path is not None else {}
    configs = []
    for i, value in enumerate(sweep.values):
        overrides = dict(base)
        overrides.update(sweep.fixed_overrides)
        overrides[key] = value
        try:
            configs.append(load_scenario(None, overrides=overrides))
        except FdMacError as e:
            raise ExperimentError(point_label(sweep, i, value), e) from e
    return configs


def simulate_point(cfg: NetworkConfig, protocol: str, seed: int, replications: int,
                   horizon: float) -> Tuple[List[SimStats], Optional[float]]:
    """
    Replicated runs of one protocol at one point.

    The HD baseline is run for every sensing time in HD_SENSING_FRACTIONS that can
    be calibrated, and the best mean NT is kept.
    """
    seeds = [seed + r for r in range(replications)]
    if protocol == "fd":
        sensing = ClosedFormSensing.calibrated(cfg)
        return run_replications(lambda s: run_fd(cfg, sensing, horizon=horizon, seed=s), seeds, workers=1), None

    T = cfg.mac.fragment_time
    best: Optional[Tuple[float, List[SimStats], float]] = None
    for fraction in HD_SENSING_FRACTIONS:
        sensing_time = fraction * T
        try:
            sensing = ClosedFormSensing.half_duplex_only(cfg, sensing_time)
        except CalibrationError as e:
            logger.debug(f"HD sensing time {sensing_time * 1e3:.3f}ms infeasible: {e}")
            continue
        runs = run_replications(
            lambda s: run_hd(cfg, sensing, sensing_time=sensing_time, horizon=horizon, seed=s), seeds, workers=1
        )
        mean = sum(run.normalized_throughput for run in runs) / len(runs)
        if best is None or mean > best[0]:
            best = (mean, runs, sensing_time)
    if best is None:
        raise CalibrationError(f"no HD sensing time meets the detection target at T={T}", T, cfg.radio.tx_power)
    return best[1], best[2]


def _optimize_point(cfg: NetworkConfig, sweep: SweepSpec, key: str, seed: int):
    # W, T and P_s are held at the point's values when swept or fixed; the rest are searched
    fixed = {canonical_key(k) for k in sweep.fixed_overrides} | {key}
    w = [cfg.mac.contention_window] if "mac.contention_window" in fixed else None
    t = [cfg.mac.fragment_time] if "mac.fragment_time" in fixed else None
    p = [cfg.radio.tx_power] if "radio.tx_power" in fixed else None
    return optimize(cfg, w_candidates=w, t_values=t, p_values=p, workers=1,
                    objective=ThroughputObjective(cfg, seed=seed))


def evaluate_point(cfg: NetworkConfig, sweep: SweepSpec, seed: int, protocols: Sequence[str] = ("fd",),
                   replications: int = 5, horizon: float = 100.0) -> List[Tuple[str, Dict[str, Any], float]]:
    """(mode label, row values, wall time) for every mode the sweep asks for."""
    key = canonical_key(sweep.swept_parameter)
    results = []
    if sweep.mode in ("analysis", "both"):
        start = time.perf_counter()
        try:
            sensing = ClosedFormSensing.calibrated(cfg)
        except CalibrationError as e:
            logger.warning(f"Infeasible analysis point: {e}")
            values = INFEASIBLE
        else:
            values = analysis_values(normalized_throughput(cfg, sensing=sensing, seed=seed, workers=1))
        results.append(("analysis", values, time.perf_counter() - start))
    if sweep.mode in ("simulation", "both"):
        for protocol in protocols:
            start = time.perf_counter()
            try:
                runs, sensing_time = simulate_point(cfg, protocol, seed, replications, horizon)
            except CalibrationError as e:
                logger.warning(f"Infeasible {protocol.upper()} simulation point: {e}")
                values = INFEASIBLE
            else:
                values = simulation_values(runs, sensing_time)
            results.append((f"simulation_{protocol}", values, time.perf_counter() - start))
    if sweep.mode == "optimize":
        start = time.perf_counter()
        result = _optimize_point(cfg, sweep, key, seed)
        results.append(("optimize", optimization_values(result), time.perf_counter() - start))
    return results


def run_sweep(config_path: Optional[Union[str, Path]], sweep: SweepSpec, seed: Optional[int] = None,
              workers: Optional[int] = None, curve: str = "", wall_time: bool = False,
              protocols: Sequence[str] = ("fd",), replications: int = 5, horizon: float = 100.0,
              show_progress: Optional[bool] = None) -> ResultTable:
    """
    Evaluate every point of a sweep; rows come back in sweep order.

    Args:
        config_path: Base scenario file (None for the built-in defaults)
        sweep: Swept parameter, its values, fixed overrides and mode
        seed: Seed shared by every point (SEED)
        workers: Points evaluated in parallel (WORKERS)
        curve: Label written to the ``curve`` column
        wall_time: Record per-row wall time
        protocols: Simulated protocols ("fd", "hd") for simulation modes
        replications: Simulation runs per point and protocol
        horizon: Simulated time per run (s)

    Raises:
        ExperimentError: naming the failing point
    """
    seed = settings.SEED if seed is None else seed
    workers = settings.WORKERS if workers is None else workers
    show_progress = settings.SHOW_PROGRESS if show_progress is None else show_progress
    unknown = [p for p in protocols if p not in PROTOCOLS]
    if unknown:
        raise ExperimentError(curve or sweep.swept_parameter, ValueError(f"unknown protocols {unknown}"))

    configs = sweep_configs(config_path, sweep)
    key = canonical_key(sweep.swept_parameter)
    logger.info(f"Sweeping {key} over {len(configs)} points ({sweep.mode}) {curve}".rstrip())

    def evaluate(i: int):
        try:
            return evaluate_point(configs[i], sweep, seed, protocols, replications, horizon)
        except FdMacError as e:
            raise ExperimentError(point_label(sweep, i, sweep.values[i], curve), e) from e

    indices = range(len(configs))
    if workers > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = pool.map(evaluate, indices)
            iterator = tqdm(futures, total=len(configs), desc=curve or key) if show_progress else futures
            outcomes = list(iterator)
    else:
        iterator = tqdm(indices, desc=curve or key) if show_progress else indices
        outcomes = [evaluate(i) for i in iterator]

    table = ResultTable(wall_time=wall_time)
    for i, (cfg, outcome) in enumerate(zip(configs, outcomes)):
        for mode, values, elapsed in outcome:
            table.add_row(cfg, mode, values, curve=curve, point=i, swept_parameter=key,
                          swept_value=sweep.values[i], wall_time=elapsed)
    return table


def run_experiment(config_path: Optional[Union[str, Path]], sweep: SweepSpec, out_path: Union[str, Path],
                   seed: Optional[int] = None, workers: Optional[int] = None, wall_time: bool = False,
                   **options: Any) -> int:
    """
    Run one sweep and write its CSV.

    Returns:
        0 on success, 1 when a point fails (the failing point is logged)
    """
    try:
        table = run_sweep(config_path, sweep, seed=seed, workers=workers, wall_time=wall_time, **options)
    except FdMacError as e:
        logger.error(str(e))
        return 1
    table.mark_curve_maxima()
    table.write_csv(out_path)
    return 0


def _db_values(low: float, high: float, step: float) -> List[float]:
    count = int(round((high - low) / step)) + 1
    return [db_to_linear(low + i * step) for i in range(count)]


XI_VALUES = (0.01, 0.02, 0.03, 0.04)
NARROW_MIN_DURATIONS = {
    "pu.mean_idle": "200ms",
    "pu.mean_active": "100ms",
    "pu.min_idle": "40ms",
    "pu.min_active": "40ms",
    "pu.evacuation_time": "40ms",
    "radio.max_tx_power": "30dB",
}
# Optimal FD (T, W) per self-interference scale for the FD/HD comparison
FD_OPTIMA = {0.45: ("20ms", 1024), 0.75: ("25ms", 1024)}


def preset_sweeps(name: str) -> List[Tuple[str, SweepSpec, Dict[str, Any]]]:
    """
    Preset sweeps over the standard result grids.

    Returns:
        (curve label, sweep, extra run_sweep options) per curve

    Raises:
        KeyError: unknown preset name
    """
    if name == "window":
        return [
            (f"xi={xi}", SweepSpec(
                swept_parameter="mac.contention_window",
                values=[float(2 ** k) for k in range(11)],
                fixed_overrides={"radio.si_exponent": xi, "radio.si_scale": 0.4, "mac.fragment_time": "18ms"},
                mode="optimize",
            ), {})
            for xi in XI_VALUES
        ]
    if name == "fragment_power":
        overrides = dict(NARROW_MIN_DURATIONS, **{
            "radio.si_exponent": 0.95, "radio.si_scale": 0.45, "mac.contention_window": 1024,
        })
        t_values = [i * 2e-3 for i in range(1, 21)]
        return [
            (f"P_s={p_db}dB", SweepSpec(
                swept_parameter="mac.fragment_time",
                values=t_values,
                fixed_overrides=dict(overrides, **{"radio.tx_power": f"{p_db}dB"}),
                mode="analysis",
            ), {})
            for p_db in range(0, 31, 2)
        ]
    if name == "network_size":
        return [
            (f"xi={xi}", SweepSpec(
                swept_parameter="num_su_pairs",
                values=[float(n) for n in (1, 5, 10, 20, 30, 40, 50, 60)],
                fixed_overrides={"radio.si_exponent": xi, "radio.si_scale": 0.4, "mac.fragment_time": "18ms",
                                 "mac.contention_window": 1024},
                mode="optimize",
            ), {})
            for xi in XI_VALUES
        ]
    if name == "fd_vs_hd":
        curves = []
        for zeta, (T, W) in FD_OPTIMA.items():
            overrides = {
                "pu.mean_idle": "200ms", "pu.mean_active": "100ms", "radio.max_tx_power": "30dB",
                "radio.si_exponent": 0.9, "radio.si_scale": zeta,
                "mac.fragment_time": T, "mac.contention_window": W,
            }
            curves.append((f"zeta={zeta}", SweepSpec(
                swept_parameter="radio.tx_power",
                values=_db_values(0.0, 30.0, 2.0),
                fixed_overrides=overrides,
                mode="both",
            ), {"protocols": PROTOCOLS}))
        return curves
    raise KeyError(f"unknown sweep preset '{name}' (known: window, fragment_power, network_size, fd_vs_hd)")


def run_preset(name: str, out_path: Union[str, Path], config_path: Optional[Union[str, Path]] = None,
               seed: Optional[int] = None, workers: Optional[int] = None, wall_time: bool = False,
               **options: Any) -> ResultTable:
    """Every curve of a preset in one table, curve maxima flagged."""
    table = ResultTable(wall_time=wall_time)
    for curve, sweep, extra in preset_sweeps(name):
        kwargs: Dict[str, Any] = dict(options)
        kwargs.update(extra)
        table.extend(run_sweep(config_path, sweep, seed=seed, workers=workers, curve=curve,
                               wall_time=wall_time, **kwargs))
    table.mark_curve_maxima()
    table.write_csv(out_path)
    return table


def parse_sweep_values(parameter: str, texts: Sequence[str]) -> List[float]:
    """Parse CLI sweep values with the field's unit parser ("10dB", "18ms", "1024")."""
    parser = SCENARIO_FIELDS[canonical_key(parameter)][0]
    values = []
    for text in texts:
        text = text.strip()
        if not text:
            continue
        value = parser(text)
        values.append(float(value))
    return values

