"""
Saturation-throughput analysis of the FD MAC protocol
"""

from .contention import contention_success_prob, reservation_overhead, success_probabilities
from .engine import conditional_throughput, normalized_throughput, pattern_mass
from .patterns import (
    ChangeInstantVector,
    PuPattern,
    SensingOutcomeSet,
    enumerate_outcomes,
    enumerate_patterns,
    expected_bits,
    outcome_probability_and_bits,
    pattern_instants,
)

__all__ = [
    "contention_success_prob",
    "reservation_overhead",
    "success_probabilities",
    "conditional_throughput",
    "normalized_throughput",
    "pattern_mass",
    "ChangeInstantVector",
    "PuPattern",
    "SensingOutcomeSet",
    "enumerate_outcomes",
    "enumerate_patterns",
    "expected_bits",
    "outcome_probability_and_bits",
    "pattern_instants",
]
