"""
Bits per Hz delivered by one data fragment under each PU event.
"""

from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.schemas import NetworkConfig, PuEvent, RadioConfig

ArrayLike = Union[float, np.ndarray]


class FragmentRates(BaseModel):
    """SU link SNRs with the PU idle (snr_idle) and active (snr_busy)."""
    model_config = ConfigDict(frozen=True)

    snr_idle: float = Field(ge=0, description="P_s / (N_0 + I)")
    snr_busy: float = Field(ge=0, description="P_s / (N_0 + I + P_p)")

    @property
    def rate_idle(self) -> float:
        return float(np.log2(1.0 + self.snr_idle))

    @property
    def rate_busy(self) -> float:
        return float(np.log2(1.0 + self.snr_busy))

    @classmethod
    def from_radio(cls, radio: RadioConfig, tx_power: Optional[float] = None,
                   receiver_self_interference: bool = True) -> "FragmentRates":
        """
        Build the rates for a transmit power.

        Args:
            radio: Radio parameters
            tx_power: P_s override (defaults to radio.tx_power)
            receiver_self_interference: Include I in the receiver noise; False gives the
                interference-free link, as seen by an HD transmitter
        """
        p_s = radio.tx_power if tx_power is None else tx_power
        interference = radio.self_interference(p_s) if receiver_self_interference else 0.0
        floor = radio.noise_power + interference
        return cls(snr_idle=p_s / floor, snr_busy=p_s / (floor + radio.pu_received_power))

    @classmethod
    def for_config(cls, cfg: NetworkConfig, tx_power: Optional[float] = None) -> "FragmentRates":
        return cls.from_radio(cfg.radio, tx_power, cfg.options.receiver_self_interference)


def fragment_bits(event: PuEvent, t: ArrayLike, T: float, rates: FragmentRates) -> ArrayLike:
    """
    Bits/Hz accumulated over a fragment of length T.

    Args:
        event: PU event over the fragment
        t: Local change instant for H10/H01 (ignored for H00/H11)
        T: Fragment time (s)
        rates: Link SNRs

    Raises:
        ValueError: if t lies outside [0, T] for a changing event
    """
    event = PuEvent(event)
    if event is PuEvent.H00:
        return T * rates.rate_idle
    if event is PuEvent.H11:
        return T * rates.rate_busy

    t_arr = np.asarray(t, dtype=float)
    slack = 1e-12 * T
    if np.any(t_arr < -slack) or np.any(t_arr > T + slack):
        raise ValueError(f"change instant must lie in [0, {T}]")
    t_arr = np.clip(t_arr, 0.0, T)
    if event is PuEvent.H10:
        bits = t_arr * rates.rate_busy + (T - t_arr) * rates.rate_idle
    else:
        bits = t_arr * rates.rate_idle + (T - t_arr) * rates.rate_busy
    return float(bits) if np.ndim(bits) == 0 else bits
