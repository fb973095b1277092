"""
Normalized saturation throughput:

    NT = sum_{i0=0}^{W-1} P_succ(i0) * T^{i0} / (T_ove(i0) + K*T)

where T^{i0} = P(H0) * E[bits of one packet] is the conditional throughput when the
winner drew backoff slot i0.
"""

from typing import Dict, Optional, Tuple
import logging

import numpy as np
from scipy.interpolate import CubicSpline

from config.settings import settings
from src.analysis.contention import reservation_overhead, success_probabilities
from src.analysis.integration import (
    OffsetEvaluation,
    PacketModel,
    monte_carlo_offsets,
    monte_carlo_pattern_mass,
    quadrature_offsets,
    quadrature_pattern_mass,
)
from src.analysis.patterns import PuPattern, enumerate_patterns
from src.model.distributions import prob_idle
from src.schemas import BackoffTerm, NetworkConfig, ThroughputReport
from src.sensing.models import ClosedFormSensing, SensingModel
from src.throughput.fragment import FragmentRates

logger = logging.getLogger(__name__)

BACKENDS = ("monte_carlo", "quadrature")


def packet_model(cfg: NetworkConfig, sensing: SensingModel) -> PacketModel:
    return PacketModel(
        sensing=sensing,
        rates=FragmentRates.for_config(cfg),
        fragment_time=cfg.mac.fragment_time,
        num_fragments=cfg.mac.fragments_per_packet,
        count_first_fragment=cfg.options.count_first_fragment,
    )


def _resolve_sensing(cfg: NetworkConfig, sensing: Optional[SensingModel]) -> SensingModel:
    if sensing is None:
        return ClosedFormSensing.calibrated(cfg)
    if abs(sensing.window - cfg.mac.fragment_time) > 1e-12:
        raise ValueError(
            f"sensing window {sensing.window} does not match fragment time {cfg.mac.fragment_time}"
        )
    return sensing


def _evaluate(cfg: NetworkConfig, packet: PacketModel, offsets: np.ndarray, weights: np.ndarray,
              backend: str, samples: Optional[int], seed: Optional[int], workers: Optional[int],
              show_progress: bool) -> OffsetEvaluation:
    if backend == "monte_carlo":
        return monte_carlo_offsets(packet, cfg.pu, offsets, weights, samples, seed, workers,
                                   cfg.options.first_idle_sampling, show_progress)
    if backend == "quadrature":
        return quadrature_offsets(packet, cfg.pu, offsets, cfg.options.first_idle_sampling, show_progress)
    raise ValueError(f"unknown integration backend '{backend}' (expected one of {BACKENDS})")


def conditional_throughput(i0: int, cfg: NetworkConfig, sensing: Optional[SensingModel] = None,
                           backend: Optional[str] = None, samples: Optional[int] = None,
                           seed: Optional[int] = None, workers: Optional[int] = None) -> float:
    """
    T^{i0}: P(H0) times the expected bits/Hz of the packet that follows slot i0.

    Args:
        i0: Winning backoff slot
        cfg: Scenario
        sensing: Sensing model (calibrated closed form by default)
        backend: "monte_carlo" or "quadrature" (ANALYSIS_BACKEND)
        samples: Monte Carlo samples
        seed: Monte Carlo seed
        workers: Monte Carlo worker threads
    """
    if not 0 <= i0 <= cfg.mac.contention_window - 1:
        raise ValueError(f"backoff slot {i0} outside [0, {cfg.mac.contention_window - 1}]")
    backend = backend or settings.ANALYSIS_BACKEND
    packet = packet_model(cfg, _resolve_sensing(cfg, sensing))
    offsets = np.array([reservation_overhead(i0, cfg.mac)])
    evaluation = _evaluate(cfg, packet, offsets, np.ones(1), backend, samples, seed, workers, False)
    return prob_idle(cfg.pu, cfg.options.prob_idle_uses_shift) * float(evaluation.values[0])


def offset_basis(offsets: np.ndarray, num_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Interpolation nodes and the (len(offsets), nodes) cubic-spline basis matrix.

    num_nodes <= 0, or at least as many nodes as offsets, gives the identity (exact evaluation).
    """
    if num_nodes <= 0 or num_nodes >= len(offsets):
        return offsets, np.eye(len(offsets))
    nodes = np.linspace(offsets[0], offsets[-1], max(num_nodes, 4))
    basis = CubicSpline(nodes, np.eye(len(nodes)), axis=0)(offsets)
    return nodes, basis


def normalized_throughput(cfg: NetworkConfig, sensing: Optional[SensingModel] = None,
                          backend: Optional[str] = None, samples: Optional[int] = None,
                          seed: Optional[int] = None, workers: Optional[int] = None,
                          offset_nodes: Optional[int] = None, show_progress: bool = False) -> ThroughputReport:
    """
    Normalized throughput NT (bits/s/Hz) with its per-backoff terms.

    Every i0 in [0, W-1] enters the sum. With ``offset_nodes`` > 0 the conditional
    throughput is evaluated on that many reservation-overhead nodes and interpolated
    with a cubic spline; the spline is linear in the node values, so the Monte Carlo
    standard error stays exact for the interpolated estimator.

    Raises:
        CalibrationError: if the detection target cannot be met at (T, P_s)
    """
    backend = backend or settings.ANALYSIS_BACKEND
    offset_nodes = settings.ANALYSIS_OFFSET_NODES if offset_nodes is None else offset_nodes
    sensing = _resolve_sensing(cfg, sensing)
    packet = packet_model(cfg, sensing)
    mac = cfg.mac
    W = mac.contention_window

    p_succ = success_probabilities(cfg.num_su_pairs, W)
    overheads = reservation_overhead(np.arange(W), mac)
    overheads = np.atleast_1d(overheads)
    weights = p_succ / (overheads + mac.packet_length)

    nodes, basis = offset_basis(overheads, offset_nodes)
    node_weights = weights @ basis
    evaluation = _evaluate(cfg, packet, nodes, node_weights, backend, samples, seed, workers, show_progress)

    p_idle = prob_idle(cfg.pu, cfg.options.prob_idle_uses_shift)
    conditional = p_idle * (basis @ evaluation.values)
    nt = float(np.dot(weights, conditional))

    standard_error = 0.0
    relative_error = 0.0
    if evaluation.weighted_samples is not None:
        y = p_idle * evaluation.weighted_samples
        standard_error = float(np.std(y, ddof=1) / np.sqrt(len(y)))
        relative_error = standard_error / nt if nt > 0 else 0.0
    elif evaluation.error_estimates is not None:
        absolute = p_idle * float(np.dot(node_weights, evaluation.error_estimates))
        relative_error = absolute / nt if nt > 0 else 0.0

    terms = [
        BackoffTerm(i0=i0, success_prob=float(p), overhead=float(o), conditional_bits=float(c))
        for i0, (p, o, c) in enumerate(zip(p_succ, overheads, conditional))
    ]
    calibration = getattr(sensing, "calibration", None)
    logger.debug(
        f"NT={nt:.6f} (se {standard_error:.2e}) at W={W} T={mac.fragment_time * 1e3:.3f}ms "
        f"P_s={cfg.radio.tx_power:.4g} backend={backend}"
    )
    return ThroughputReport(
        normalized_throughput=max(nt, 0.0),
        per_backoff_terms=terms,
        integration_error_estimate=relative_error,
        standard_error=standard_error,
        backend=backend,
        calibration=calibration,
    )


def pattern_mass(cfg: NetworkConfig, i0: int = 0, samples: Optional[int] = None, seed: Optional[int] = None,
                 backend: str = "monte_carlo") -> Tuple[Dict[PuPattern, float], float]:
    """
    Probability mass of each pattern's region for a winner at slot i0, without P(H0).

    Returns:
        (mass per pattern, total); the total is the probability that the data phase
        starts idle
    """
    offset = reservation_overhead(i0, cfg.mac)
    K, T = cfg.mac.fragments_per_packet, cfg.mac.fragment_time
    first_idle = cfg.options.first_idle_sampling
    if backend == "quadrature":
        masses = {
            pattern: quadrature_pattern_mass(cfg.pu, offset, pattern, T, first_idle)
            for pattern in enumerate_patterns(K)
        }
    else:
        samples = settings.ANALYSIS_SAMPLES if samples is None else samples
        seed = settings.SEED if seed is None else seed
        masses = monte_carlo_pattern_mass(cfg.pu, offset, K, T, samples, seed, first_idle)
    return masses, float(sum(masses.values()))
