"""
Shared math primitives: Gaussian tail, shifted-exponential durations, PU state probabilities.
"""

from typing import Optional, Union

import numpy as np
from scipy.special import ndtr

from src.schemas import PuActivityModel

ArrayLike = Union[float, np.ndarray]


def gaussian_tail(x: ArrayLike) -> ArrayLike:
    """
    Standard Gaussian tail Q(x) = Pr{Z > x}, Z ~ N(0, 1).

    Includes the 1/sqrt(2*pi) normalization. Evaluated as ndtr(-x), which keeps
    full relative accuracy deep in the upper tail and underflows to 0 (never NaN).

    Args:
        x: Scalar or array argument

    Returns:
        Tail probability with the shape of ``x``
    """
    result = ndtr(-np.asarray(x, dtype=float))
    return float(result) if np.ndim(result) == 0 else result


def shifted_exp_pdf(t: ArrayLike, mean: float, min_duration: float) -> ArrayLike:
    """Density of ``min_duration + Exp(mean)``; zero below the shift."""
    if mean <= 0:
        raise ValueError(f"mean must be positive, got {mean}")
    if min_duration < 0:
        raise ValueError(f"min_duration must be non-negative, got {min_duration}")
    t_arr = np.asarray(t, dtype=float)
    excess = t_arr - min_duration
    density = np.where(excess >= 0, np.exp(-np.maximum(excess, 0.0) / mean) / mean, 0.0)
    return float(density) if np.ndim(density) == 0 else density


def shifted_exp_survival(t: ArrayLike, mean: float, min_duration: float) -> ArrayLike:
    """Pr{tau > t} for ``tau = min_duration + Exp(mean)``."""
    if mean <= 0:
        raise ValueError(f"mean must be positive, got {mean}")
    t_arr = np.asarray(t, dtype=float)
    excess = t_arr - min_duration
    survival = np.where(excess > 0, np.exp(-np.maximum(excess, 0.0) / mean), 1.0)
    return float(survival) if np.ndim(survival) == 0 else survival


def shifted_exp_sample(mean: float, min_duration: float, rng: np.random.Generator,
                       size: Optional[int] = None) -> ArrayLike:
    """Draw ``min_duration + Exp(mean)`` from an explicit generator."""
    if mean <= 0:
        raise ValueError(f"mean must be positive, got {mean}")
    return min_duration + rng.exponential(mean, size)


def residual_exp_sample(mean: float, min_duration: float, rng: np.random.Generator,
                        size: Optional[int] = None) -> ArrayLike:
    """
    Stationary residual (forward recurrence) time of a shifted-exponential duration.

    The equilibrium excess density is Pr{tau > x} / E[tau]: uniform on [0, min] with
    total mass min/(min+mean), followed by ``min + Exp(mean)`` with the remaining mass.
    """
    if mean <= 0:
        raise ValueError(f"mean must be positive, got {mean}")
    total = min_duration + mean
    in_shift = rng.random(size) < (min_duration / total)
    position = rng.random(size) * min_duration
    tail = min_duration + rng.exponential(mean, size)
    result = np.where(in_shift, position, tail)
    return float(result) if np.ndim(result) == 0 else result


def residual_exp_pdf(t: ArrayLike, mean: float, min_duration: float) -> ArrayLike:
    """Density of ``residual_exp_sample``: survival(t) / (min + mean)."""
    density = shifted_exp_survival(t, mean, min_duration) / (min_duration + mean)
    density = np.where(np.asarray(t, dtype=float) < 0, 0.0, density)
    return float(density) if np.ndim(density) == 0 else density


def residual_exp_survival(t: ArrayLike, mean: float, min_duration: float) -> ArrayLike:
    if mean <= 0:
        raise ValueError(f"mean must be positive, got {mean}")
    t_arr = np.maximum(np.asarray(t, dtype=float), 0.0)
    total = min_duration + mean
    inside = 1.0 - t_arr / total
    beyond = (mean / total) * np.exp(-np.maximum(t_arr - min_duration, 0.0) / mean)
    survival = np.where(t_arr < min_duration, inside, beyond)
    return float(survival) if np.ndim(survival) == 0 else survival


def prob_idle(pu: PuActivityModel, uses_shift: bool = True) -> float:
    """
    Stationary probability that the PU is idle, P(H0).

    Args:
        pu: PU activity model
        uses_shift: Use total means (T_min + mean) in the ratio; False gives the
            ratio of the exponential means only

    Returns:
        P(H0); P(H1) = 1 - P(H0)
    """
    if uses_shift:
        idle, active = pu.mean_idle_total, pu.mean_active_total
    else:
        idle, active = pu.mean_idle, pu.mean_active
    return idle / (idle + active)


def prob_busy(pu: PuActivityModel, uses_shift: bool = True) -> float:
    return 1.0 - prob_idle(pu, uses_shift)
