"""
Data schemas for scenarios, calibrations and reports
"""

from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.settings import settings


class PuEvent(str, Enum):
    """PU behavior over one fragment: start state then end state (0 idle, 1 active)."""
    H00 = "H00"
    H10 = "H10"
    H01 = "H01"
    H11 = "H11"

    @property
    def starts_active(self) -> bool:
        return self.value[1] == "1"

    @property
    def ends_active(self) -> bool:
        return self.value[2] == "1"

    @property
    def has_change(self) -> bool:
        return self.starts_active != self.ends_active

    @classmethod
    def from_states(cls, starts_active: bool, ends_active: bool) -> "PuEvent":
        return cls(f"H{int(starts_active)}{int(ends_active)}")


# Integer codes used by the vectorized engines
EVENT_ORDER: Tuple[PuEvent, ...] = (PuEvent.H00, PuEvent.H10, PuEvent.H01, PuEvent.H11)
EVENT_CODE = {event: code for code, event in enumerate(EVENT_ORDER)}


class SensingMode(str, Enum):
    """FD senses while transmitting (noise plus self-interference); HD senses silently."""
    FULL_DUPLEX = "fd"
    HALF_DUPLEX = "hd"


class PuActivityModel(BaseModel):
    """Idle/active renewal process of the primary user (shifted exponential durations)."""
    model_config = ConfigDict(frozen=True)

    mean_idle: float = Field(gt=0, description="Mean of the exponential part of idle durations (s)")
    mean_active: float = Field(gt=0, description="Mean of the exponential part of active durations (s)")
    min_idle: float = Field(gt=0, description="Minimum idle duration T_min^id (s)")
    min_active: float = Field(gt=0, description="Minimum active duration T_min^ac (s)")
    evacuation_time: float = Field(gt=0, description="Channel evacuation time T_eva (s)")

    @model_validator(mode="after")
    def _durations_exceed_evacuation(self):
        if self.min_idle < self.evacuation_time:
            raise ValueError("min_idle must be >= evacuation_time")
        if self.min_active < self.evacuation_time:
            raise ValueError("min_active must be >= evacuation_time")
        return self

    @property
    def mean_idle_total(self) -> float:
        return self.min_idle + self.mean_idle

    @property
    def mean_active_total(self) -> float:
        return self.min_active + self.mean_active


class MacTimingConfig(BaseModel):
    """Contention and fragmentation timing of the MAC protocol."""
    model_config = ConfigDict(frozen=True)

    mini_slot: float = Field(gt=0, description="Backoff mini-slot sigma (s)")
    sifs: float = Field(ge=0, description="SIFS (s)")
    difs: float = Field(ge=0, description="DIFS (s)")
    rts: float = Field(ge=0, description="RTS duration (s)")
    cts: float = Field(ge=0, description="CTS duration (s)")
    contention_window: int = Field(ge=1, description="Contention window W")
    max_contention_window: int = Field(ge=1, description="Maximum contention window W_max")
    fragments_per_packet: int = Field(ge=1, description="Fragments per packet K")
    fragment_time: float = Field(gt=0, description="Fragment duration T (s)")

    @model_validator(mode="after")
    def _window_within_max(self):
        if self.contention_window > self.max_contention_window:
            raise ValueError("contention_window must be <= max_contention_window")
        return self

    @property
    def packet_length(self) -> float:
        return self.fragments_per_packet * self.fragment_time


class RadioConfig(BaseModel):
    """Linear powers are normalized to unit noise."""
    model_config = ConfigDict(frozen=True)

    tx_power: float = Field(ge=0, description="SU transmit power P_s (linear)")
    max_tx_power: float = Field(gt=0, description="Maximum SU transmit power P_max (linear)")
    noise_power: float = Field(default=1.0, gt=0, description="Noise power N_0 (linear)")
    pu_received_power: float = Field(ge=0, description="PU power received at the SU P_p (linear)")
    si_scale: float = Field(ge=0, description="Self-interference scale zeta")
    si_exponent: float = Field(ge=0, le=1, description="Self-interference exponent xi")
    sampling_frequency: float = Field(gt=0, description="Sensing sampling frequency f_s (Hz)")

    @model_validator(mode="after")
    def _power_within_max(self):
        if self.tx_power > self.max_tx_power:
            raise ValueError("tx_power must be <= max_tx_power")
        return self

    def self_interference(self, tx_power: Optional[float] = None) -> float:
        """I = zeta * P_s^xi (0 for a silent transmitter)."""
        p = self.tx_power if tx_power is None else tx_power
        if p <= 0:
            return 0.0
        return self.si_scale * p ** self.si_exponent


class ModelOptions(BaseModel):
    """Switches for readings the protocol description leaves open."""
    model_config = ConfigDict(frozen=True)

    prob_idle_uses_shift: bool = Field(default_factory=lambda: settings.PROB_IDLE_USES_SHIFT)
    count_first_fragment: bool = Field(default_factory=lambda: settings.COUNT_FIRST_FRAGMENT)
    receiver_self_interference: bool = Field(default_factory=lambda: settings.RECEIVER_SELF_INTERFERENCE)
    first_idle_sampling: Literal["fresh", "residual"] = Field(
        default_factory=lambda: settings.FIRST_IDLE_SAMPLING
    )


class NetworkConfig(BaseModel):
    """One complete scenario."""
    model_config = ConfigDict(frozen=True)

    num_su_pairs: int = Field(ge=1, description="Number of SU pairs n_0")
    pu: PuActivityModel
    mac: MacTimingConfig
    radio: RadioConfig
    target_detection_prob: float = Field(gt=0, lt=1, description="Average detection target")
    options: ModelOptions = Field(default_factory=ModelOptions)

    @model_validator(mode="after")
    def _fragment_within_evacuation(self):
        if self.mac.fragment_time > self.pu.evacuation_time:
            raise ValueError("fragment_time must be <= evacuation_time")
        return self

    def with_updates(self, **changes) -> "NetworkConfig":
        """Copy with dotted-path updates, e.g. ``with_updates(**{"mac.fragment_time": 0.02})``.

        The copy is re-validated.
        """
        data = self.model_dump()
        for path, value in changes.items():
            node = data
            *parents, leaf = path.split(".")
            for key in parents:
                node = node[key]
            if leaf not in node:
                raise KeyError(f"unknown scenario field '{path}'")
            node[leaf] = value
        return NetworkConfig.model_validate(data)


class SensingCalibration(BaseModel):
    """Detection thresholds that meet the average-detection target with equality."""
    model_config = ConfigDict(frozen=True)

    threshold_fd: float = Field(gt=0)
    threshold_hd: float = Field(gt=0)
    fragment_time: float = Field(gt=0, description="Sensing duration the thresholds were set for (s)")
    tx_power: float = Field(ge=0)
    achieved_avg_detection_fd: float
    achieved_avg_detection_hd: float


class BackoffTerm(BaseModel):
    """One term of the normalized-throughput sum."""
    i0: int
    success_prob: float
    overhead: float
    conditional_bits: float


class ThroughputReport(BaseModel):
    normalized_throughput: float = Field(ge=0, description="bits/s/Hz")
    per_backoff_terms: List[BackoffTerm] = Field(default_factory=list)
    integration_error_estimate: float = Field(default=0.0, description="Relative error estimate")
    standard_error: float = Field(default=0.0, description="Absolute standard error of NT (Monte Carlo)")
    backend: str = "monte_carlo"
    calibration: Optional[SensingCalibration] = None


class EvaluatedPoint(BaseModel):
    contention_window: int
    fragment_time: float
    tx_power: float
    throughput: float
    feasible: bool = True


class OptimizationResult(BaseModel):
    best_w: int
    best_fragment_time: float
    best_tx_power: float
    best_throughput: float
    search_trace: List[EvaluatedPoint] = Field(default_factory=list)
    final_report: Optional[ThroughputReport] = Field(
        default=None, description="Optimum re-evaluated with the full analysis settings"
    )


class SimStats(BaseModel):
    """Counters accumulated after warm-up."""
    bits_delivered: float = 0.0
    elapsed: float = 0.0
    cycles: int = 0
    successes: int = 0
    collisions: int = 0
    missed_detections: int = 0
    false_alarm_stalls: int = 0
    pu_interference_time: float = 0.0
    pu_activations: int = 0
    max_activation_interference: float = 0.0
    pu_idle_time: float = 0.0
    fragments_fd: int = 0
    fragments_hd: int = 0

    @property
    def normalized_throughput(self) -> float:
        return self.bits_delivered / self.elapsed if self.elapsed > 0 else 0.0

    @property
    def idle_fraction(self) -> float:
        return self.pu_idle_time / self.elapsed if self.elapsed > 0 else 0.0


class SweepSpec(BaseModel):
    """One parameter sweep of the experiment driver."""
    swept_parameter: str
    values: List[float] = Field(default_factory=list)
    fixed_overrides: dict = Field(default_factory=dict)
    mode: Literal["analysis", "simulation", "both", "optimize"] = "analysis"


class CrossValidation(BaseModel):
    """Analysis against simulation at one scenario."""
    analysis_throughput: float
    analysis_standard_error: float = 0.0
    simulated_throughput: float
    simulated_standard_error: float = 0.0
    replications: int
    relative_difference: float
    combined_standard_error: float

    @property
    def agrees(self) -> bool:
        """Within 5% relative, or within three combined standard errors when that is wider."""
        gap = abs(self.simulated_throughput - self.analysis_throughput)
        tolerance = max(0.05 * abs(self.analysis_throughput), 3 * self.combined_standard_error)
        return gap <= tolerance


class ValidationReport(BaseModel):
    """Scenario checks and derived quantities, without running experiments."""
    source: str = "defaults"
    violations: List[str] = Field(default_factory=list)
    derived: Dict[str, float] = Field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


RocPoint = Tuple[float, float]
