"""
MAC configuration search: exhaustive over W, grid plus golden-section over T,
golden-section over the transmit power (in dB) with a final local grid.
"""

from concurrent.futures import ThreadPoolExecutor
from threading import Lock
from typing import Callable, Iterable, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from cachetools import LRUCache
from pydantic import ValidationError

from config.settings import settings
from src.analysis.engine import normalized_throughput
from src.errors import CalibrationError, ConfigurationError, OptimizationError
from src.model.units import db_to_linear, linear_to_db
from src.schemas import EvaluatedPoint, NetworkConfig, OptimizationResult, SensingCalibration
from src.sensing.calibration import calibrate_threshold
from src.sensing.models import ClosedFormSensing

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       tol: float = 1e-5) -> Tuple[float, float]:
    """
    Golden-section search for the maximum of a unimodal f on [a, b].

    Returns:
        (x, f(x)) for the best point evaluated
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = (a + b) / 2
        return x, f(x)

    # Required steps to achieve tolerance
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)
    best = max((yc, c), (yd, d))

    for _ in range(n - 1):
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
            best = max(best, (yc, c))
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
            best = max(best, (yd, d))

    return best[1], best[0]


def count_local_maxima(values: Sequence[float]) -> int:
    """Strict local maxima of a sampled curve, plateaus counted once; -inf entries ignored."""
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0
    # collapse plateaus
    collapsed = [finite[0]]
    for v in finite[1:]:
        if not math.isclose(v, collapsed[-1], rel_tol=1e-12, abs_tol=1e-15):
            collapsed.append(v)
    peaks = 0
    for i, v in enumerate(collapsed):
        left = collapsed[i - 1] if i > 0 else -math.inf
        right = collapsed[i + 1] if i + 1 < len(collapsed) else -math.inf
        if v > left and v > right:
            peaks += 1
    return peaks


class ThroughputObjective:
    """
    Memoized NT(W, T, P_s) on a fixed set of random numbers.

    Every evaluation uses the same seed, so the search optimizes one deterministic
    sample-average surface. Infeasible points (uncalibratable threshold, invalid
    scenario) evaluate to -inf and are traced as infeasible.
    """

    def __init__(self, cfg: NetworkConfig, samples: Optional[int] = None, seed: Optional[int] = None,
                 offset_nodes: Optional[int] = None, backend: Optional[str] = None,
                 cache_size: Optional[int] = None):
        self.cfg = cfg
        self.samples = settings.OPTIMIZER_SAMPLES if samples is None else samples
        self.seed = settings.SEED if seed is None else seed
        self.offset_nodes = settings.OPTIMIZER_OFFSET_NODES if offset_nodes is None else offset_nodes
        self.backend = backend
        size = settings.OPTIMIZER_CACHE_SIZE if cache_size is None else cache_size
        self._values = LRUCache(maxsize=size)
        self._calibrations = LRUCache(maxsize=size)
        self._lock = Lock()
        self.trace: List[EvaluatedPoint] = []

    @staticmethod
    def _key(W: int, T: float, tx_power: float) -> Tuple[int, float, float]:
        return int(W), round(float(T), 12), round(float(tx_power), 12)

    def scenario(self, W: int, T: float, tx_power: float) -> NetworkConfig:
        return self.cfg.with_updates(**{
            "mac.contention_window": int(W),
            "mac.fragment_time": float(T),
            "radio.tx_power": float(tx_power),
        })

    def calibration(self, cfg: NetworkConfig) -> SensingCalibration:
        key = (round(cfg.mac.fragment_time, 12), round(cfg.radio.tx_power, 12))
        with self._lock:
            if key in self._calibrations:
                return self._calibrations[key]
        calibration = calibrate_threshold(cfg)
        with self._lock:
            self._calibrations[key] = calibration
        return calibration

    def __call__(self, W: int, T: float, tx_power: float) -> float:
        key = self._key(W, T, tx_power)
        with self._lock:
            if key in self._values:
                return self._values[key]

        feasible = True
        try:
            cfg = self.scenario(*key)
            sensing = ClosedFormSensing.from_calibration(cfg, self.calibration(cfg))
            report = normalized_throughput(cfg, sensing=sensing, backend=self.backend, samples=self.samples,
                                           seed=self.seed, workers=1, offset_nodes=self.offset_nodes)
            value = report.normalized_throughput
        except (CalibrationError, ConfigurationError, ValidationError) as e:
            logger.debug(f"Infeasible point W={W} T={T:.6g} P_s={tx_power:.6g}: {e}")
            value, feasible = -math.inf, False

        with self._lock:
            self._values[key] = value
            self.trace.append(EvaluatedPoint(
                contention_window=key[0], fragment_time=key[1], tx_power=key[2],
                throughput=value if feasible else 0.0, feasible=feasible,
            ))
        return value


def trace_order(point: EvaluatedPoint) -> Tuple[int, float, float]:
    return point.contention_window, point.fragment_time, point.tx_power


def _power_range_db(cfg: NetworkConfig) -> Tuple[float, float]:
    high = linear_to_db(cfg.radio.max_tx_power)
    low = min(settings.POWER_SEARCH_MIN_DB, high)
    return low, high


def optimize_power(T: float, W: int, cfg: NetworkConfig,
                   objective: Optional[ThroughputObjective] = None,
                   p_values: Optional[Iterable[float]] = None) -> Tuple[float, float]:
    """
    Best transmit power for fixed (T, W).

    A coarse dB grid (POWER_GRID_POINTS, P_max included) picks a bracket, golden-section
    search refines between the best grid point's neighbors and a local grid checks
    its result. A monotone objective clamps to P_max. Every evaluation recalibrates
    the detection threshold for its P_s.

    Args:
        T: Fragment time
        W: Contention window
        cfg: Scenario
        objective: Shared memoized objective (a fresh one by default)
        p_values: Explicit linear powers to scan instead of searching

    Returns:
        (P_s*, NT)

    Raises:
        OptimizationError: if every evaluated power is infeasible
    """
    objective = objective or ThroughputObjective(cfg)
    candidates: List[Tuple[float, float]] = []

    def evaluate(p_linear: float) -> float:
        value = objective(W, T, p_linear)
        candidates.append((value, p_linear))
        return value

    if p_values is not None:
        for p in p_values:
            evaluate(float(p))
    else:
        low_db, high_db = _power_range_db(cfg)
        grid = np.linspace(low_db, high_db, max(settings.POWER_GRID_POINTS, 2))
        grid_values = [evaluate(db_to_linear(float(x))) for x in grid]
        i = int(np.argmax(grid_values))
        bracket = (float(grid[max(i - 1, 0)]), float(grid[min(i + 1, len(grid) - 1)]))
        best_db, _ = golden_section_max(lambda x: evaluate(db_to_linear(x)), *bracket,
                                        settings.POWER_SEARCH_TOL_DB)
        step = 2 * settings.POWER_SEARCH_TOL_DB
        for x in np.linspace(best_db - step, best_db + step, settings.POWER_REFINE_POINTS):
            if low_db <= x <= high_db:
                evaluate(db_to_linear(float(x)))
        evaluate(cfg.radio.max_tx_power)

    value, power = max(candidates)
    if not math.isfinite(value):
        raise OptimizationError(f"no feasible transmit power at T={T:.6g}s, W={W}")
    return power, value


def power_grid_scan(T: float, W: int, cfg: NetworkConfig, points: int = 25,
                    objective: Optional[ThroughputObjective] = None) -> List[Tuple[float, float]]:
    """NT over an evenly spaced dB grid of transmit powers (unimodality oracle)."""
    objective = objective or ThroughputObjective(cfg)
    low_db, high_db = _power_range_db(cfg)
    powers = [db_to_linear(float(x)) for x in np.linspace(low_db, high_db, points)]
    return [(p, objective(W, T, p)) for p in powers]


def default_w_candidates(cfg: NetworkConfig, full_range: bool = False) -> List[int]:
    """Powers of two up to W_max (W_max itself included), or every W in [1, W_max]."""
    w_max = cfg.mac.max_contention_window
    if full_range:
        return list(range(1, w_max + 1))
    candidates = []
    w = 1
    while w <= w_max:
        candidates.append(w)
        w *= 2
    if candidates[-1] != w_max:
        candidates.append(w_max)
    return candidates


def default_t_grid(cfg: NetworkConfig, points: Optional[int] = None) -> List[float]:
    """Evenly spaced fragment times over (0, T_eva]."""
    points = settings.T_GRID_POINTS if points is None else points
    t_eva = cfg.pu.evacuation_time
    return [float(t) for t in np.linspace(t_eva / points, t_eva, points)]


def optimize(cfg: NetworkConfig, w_candidates: Optional[Sequence[int]] = None,
             t_resolution: Optional[float] = None, t_values: Optional[Sequence[float]] = None,
             p_values: Optional[Sequence[float]] = None, full_w_range: bool = False,
             workers: Optional[int] = None, objective: Optional[ThroughputObjective] = None,
             final_evaluation: bool = True) -> OptimizationResult:
    """
    Search (W, T, P_s) for the largest normalized throughput under the detection constraint.

    For each W the objective max_{P_s} NT is evaluated on the T grid (in parallel),
    then refined by golden-section search between the incumbent's grid neighbors.

    Args:
        cfg: Scenario (its W, T and P_s are starting values only)
        w_candidates: Contention windows to try (powers of two by default)
        t_resolution: Golden-section tolerance on T (T_SEARCH_TOL)
        t_values: Explicit T grid; a single value disables refinement
        p_values: Explicit power grid instead of the power search
        full_w_range: Try every W in [1, W_max]
        workers: Threads for the T grid (WORKERS)
        objective: Shared objective (fresh by default)
        final_evaluation: Re-evaluate the optimum with the full analysis settings

    Raises:
        OptimizationError: if no candidate point is feasible
    """
    w_candidates = list(w_candidates) if w_candidates else default_w_candidates(cfg, full_w_range)
    t_grid = sorted(t_values) if t_values else default_t_grid(cfg)
    t_resolution = settings.T_SEARCH_TOL if t_resolution is None else t_resolution
    workers = settings.WORKERS if workers is None else workers
    objective = objective or ThroughputObjective(cfg)
    t_eva = cfg.pu.evacuation_time

    best: Optional[Tuple[float, int, float, float]] = None

    def best_over_power(W: int, T: float) -> Tuple[float, float]:
        try:
            power, value = optimize_power(T, W, cfg, objective, p_values)
        except OptimizationError:
            return -math.inf, math.nan
        return value, power

    for W in w_candidates:
        if W > cfg.mac.max_contention_window:
            raise OptimizationError(f"W={W} exceeds W_max={cfg.mac.max_contention_window}")
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                grid = list(pool.map(lambda t: best_over_power(W, t), t_grid))
        else:
            grid = [best_over_power(W, t) for t in t_grid]

        values = [v for v, _ in grid]
        if count_local_maxima(values) > 1:
            logger.warning(f"Objective over T is not unimodal at W={W}; refining around the global grid maximum")
        i = int(np.argmax(values))
        incumbent = (values[i], W, t_grid[i], grid[i][1])

        if len(t_grid) > 1 and math.isfinite(values[i]):
            low = t_grid[i - 1] if i > 0 else t_grid[0] / 2
            high = t_grid[i + 1] if i + 1 < len(t_grid) else t_eva
            powers = {}

            def along_t(T: float) -> float:
                value, power = best_over_power(W, T)
                powers[T] = power
                return value

            t_star, value = golden_section_max(along_t, low, min(high, t_eva), t_resolution)
            if value > incumbent[0]:
                incumbent = (value, W, t_star, powers[t_star])

        logger.info(
            f"W={W}: best NT={incumbent[0]:.5f} at T={incumbent[2] * 1e3:.3f}ms "
            f"P_s={linear_to_db(incumbent[3]):.2f}dB"
        )
        if best is None or incumbent[0] > best[0]:
            best = incumbent

    if best is None or not math.isfinite(best[0]):
        raise OptimizationError("no feasible (W, T, P_s) in the searched space")

    value, W, T, power = best
    result = OptimizationResult(
        best_w=W,
        best_fragment_time=T,
        best_tx_power=power,
        best_throughput=value,
        search_trace=sorted(objective.trace, key=trace_order),
    )
    if final_evaluation:
        cfg_best = objective.scenario(W, T, power)
        sensing = ClosedFormSensing.from_calibration(cfg_best, objective.calibration(cfg_best))
        result = result.model_copy(update={"final_report": normalized_throughput(cfg_best, sensing=sensing)})
    logger.info(
        f"Optimum: W*={W} T*={T * 1e3:.3f}ms P_s*={linear_to_db(power):.2f}dB NT={value:.5f}"
    )
    return result


def surface_scan(cfg: NetworkConfig, t_values: Sequence[float], p_values: Sequence[float],
                 W: Optional[int] = None, objective: Optional[ThroughputObjective] = None,
                 workers: Optional[int] = None) -> List[EvaluatedPoint]:
    """NT over a (T, P_s) grid at fixed W, row-major in T."""
    W = cfg.mac.contention_window if W is None else W
    objective = objective or ThroughputObjective(cfg)
    workers = settings.WORKERS if workers is None else workers
    points = [(float(t), float(p)) for t in t_values for p in p_values]

    def evaluate(point: Tuple[float, float]) -> EvaluatedPoint:
        t, p = point
        value = objective(W, t, p)
        feasible = math.isfinite(value)
        return EvaluatedPoint(contention_window=W, fragment_time=t, tx_power=p,
                              throughput=value if feasible else 0.0, feasible=feasible)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(evaluate, points))
    return [evaluate(point) for point in points]
