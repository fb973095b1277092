"""
Unit parsing for scenario files: durations carry s/ms/us, powers carry dB/lin.
"""

import math
import re

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*({_NUMBER})\s*([A-Za-zµ]*)\s*$")

# Divisors to seconds
DURATION_UNITS = {
    "s": 1.0,
    "ms": 1e3,
    "us": 1e6,
    "µs": 1e6,
}

FREQUENCY_UNITS = {
    "hz": 1.0,
    "khz": 1e3,
    "mhz": 1e6,
    "ghz": 1e9,
}


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0:
        return -math.inf
    return 10.0 * math.log10(value)


def _split(text: str) -> tuple:
    match = _QUANTITY.match(str(text))
    if not match:
        raise ValueError(f"cannot parse quantity '{text}'")
    return float(match.group(1)), match.group(2)


def parse_duration(text: str) -> float:
    """'20ms' -> 0.02 seconds. A unit is mandatory."""
    value, unit = _split(text)
    if not unit:
        raise ValueError(f"duration '{text}' needs a unit (s, ms, us)")
    if unit not in DURATION_UNITS:
        raise ValueError(f"unknown duration unit '{unit}' in '{text}'")
    return value / DURATION_UNITS[unit]


def parse_power(text: str) -> float:
    """'11 dB' -> 12.589 linear; '0.01 lin' -> 0.01. A unit is mandatory."""
    value, unit = _split(text)
    unit = unit.lower()
    if unit == "db":
        return db_to_linear(value)
    if unit == "lin":
        if value < 0:
            raise ValueError(f"linear power cannot be negative: '{text}'")
        return value
    raise ValueError(f"power '{text}' needs a unit (dB or lin)")


def parse_frequency(text: str) -> float:
    """'6 MHz' -> 6e6; a bare number is read as Hz."""
    value, unit = _split(text)
    if not unit:
        return value
    factor = FREQUENCY_UNITS.get(unit.lower())
    if factor is None:
        raise ValueError(f"unknown frequency unit '{unit}' in '{text}'")
    return value * factor


def format_duration(seconds: float) -> str:
    return f"{seconds * 1e3:.12g}ms"


def format_power(linear: float) -> str:
    return f"{linear_to_db(linear):.12g}dB" if linear > 0 else "0lin"
