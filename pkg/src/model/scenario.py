from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Union
import logging

from dotenv import dotenv_values
from pydantic import ValidationError

from config.settings import settings
from src.errors import ConfigurationError
from src.model.units import (
    format_duration,
    format_power,
    parse_duration,
    parse_frequency,
    parse_power,
)
from src.schemas import NetworkConfig

logger = logging.getLogger(__name__)


def _parse_bool(text: str) -> bool:
    value = str(text).strip().lower()
    if value in {"1", "true", "yes", "on"}:
        return True
    if value in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: '{text}'")


def _parse_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got '{text}'")
    return int(value)


def _parse_sampling(text: str) -> str:
    value = str(text).strip().lower()
    if value not in {"fresh", "residual"}:
        raise ValueError(f"first_idle_sampling must be 'fresh' or 'residual', got '{text}'")
    return value


# Flat key -> (parser, default text). Defaults: 802.11 DSSS timing and the
# numerical-results scenario (noise normalized to one).
SCENARIO_FIELDS: Dict[str, tuple] = {
    "num_su_pairs": (_parse_int, "40"),
    "target_detection_prob": (float, "0.8"),
    "pu.mean_idle": (parse_duration, "1000ms"),
    "pu.mean_active": (parse_duration, "100ms"),
    "pu.min_idle": (parse_duration, "45ms"),
    "pu.min_active": (parse_duration, "40ms"),
    "pu.evacuation_time": (parse_duration, "40ms"),
    "mac.mini_slot": (parse_duration, "20us"),
    "mac.sifs": (parse_duration, "10us"),
    "mac.difs": (parse_duration, "50us"),
    "mac.rts": (parse_duration, "352us"),
    "mac.cts": (parse_duration, "304us"),
    "mac.contention_window": (_parse_int, "1024"),
    "mac.max_contention_window": (_parse_int, "1024"),
    "mac.fragments_per_packet": (_parse_int, "4"),
    "mac.fragment_time": (parse_duration, "18ms"),
    "radio.tx_power": (parse_power, "10.78dB"),
    "radio.max_tx_power": (parse_power, "25dB"),
    "radio.noise_power": (parse_power, "0dB"),
    "radio.pu_received_power": (parse_power, "-20dB"),
    "radio.si_scale": (float, "0.4"),
    "radio.si_exponent": (float, "0.04"),
    "radio.sampling_frequency": (parse_frequency, "6MHz"),
    "options.prob_idle_uses_shift": (_parse_bool, None),
    "options.count_first_fragment": (_parse_bool, None),
    "options.receiver_self_interference": (_parse_bool, None),
    "options.first_idle_sampling": (_parse_sampling, None),
}

# Bare field name -> dotted key (all leaf names are unique across sections)
_ALIASES = {key.split(".")[-1]: key for key in SCENARIO_FIELDS}


def canonical_key(key: str) -> str:
    """Map 'fragment_time' or 'mac.fragment_time' to the dotted form."""
    key = key.strip()
    if key in SCENARIO_FIELDS:
        return key
    if key in _ALIASES:
        return _ALIASES[key]
    raise KeyError(f"unknown scenario key '{key}'")


def _parse_value(key: str, value: Any) -> Any:
    parser: Callable = SCENARIO_FIELDS[key][0]
    # Already-numeric overrides are taken in SI / linear units
    if not isinstance(value, str):
        if parser is _parse_bool:
            return bool(value)
        if parser is _parse_int:
            return _parse_int(str(value))
        return value
    return parser(value)


def collect_violations(values: Mapping[str, Any]) -> List[str]:
    """
    Check every scenario invariant on parsed values.

    Args:
        values: Parsed flat values keyed by dotted names

    Returns:
        One message per violated invariant (empty when the scenario is valid)
    """
    v = values
    problems: List[str] = []

    def positive(key: str):
        if key in v and not v[key] > 0:
            problems.append(f"{key} must be > 0 (got {v[key]})")

    for key in ("pu.mean_idle", "pu.mean_active", "pu.min_idle", "pu.min_active",
                "pu.evacuation_time", "mac.mini_slot", "mac.fragment_time",
                "radio.max_tx_power", "radio.noise_power", "radio.sampling_frequency"):
        positive(key)
    for key in ("mac.sifs", "mac.difs", "mac.rts", "mac.cts", "radio.pu_received_power",
                "radio.si_scale"):
        if key in v and v[key] < 0:
            problems.append(f"{key} must be >= 0 (got {v[key]})")

    if v.get("num_su_pairs", 1) < 1:
        problems.append(f"num_su_pairs must be >= 1 (got {v['num_su_pairs']})")
    p_d = v.get("target_detection_prob", 0.5)
    if not 0 < p_d < 1:
        problems.append(f"target_detection_prob must lie in (0, 1) (got {p_d})")

    eva = v.get("pu.evacuation_time")
    if eva is not None:
        if v.get("pu.min_idle", eva) < eva:
            problems.append("pu.min_idle must be >= pu.evacuation_time")
        if v.get("pu.min_active", eva) < eva:
            problems.append("pu.min_active must be >= pu.evacuation_time")
        if v.get("mac.fragment_time", 0) > eva:
            problems.append(
                f"mac.fragment_time ({v['mac.fragment_time']}) must be <= pu.evacuation_time ({eva})"
            )

    w, w_max = v.get("mac.contention_window", 1), v.get("mac.max_contention_window", 1)
    if w < 1:
        problems.append(f"mac.contention_window must be >= 1 (got {w})")
    if w > w_max:
        problems.append(f"mac.contention_window ({w}) must be <= mac.max_contention_window ({w_max})")
    if v.get("mac.fragments_per_packet", 1) < 1:
        problems.append("mac.fragments_per_packet must be >= 1")

    p_s, p_max = v.get("radio.tx_power", 0.0), v.get("radio.max_tx_power", 1.0)
    if not 0 < p_s:
        problems.append(f"radio.tx_power must be > 0 (got {p_s})")
    if p_s > p_max:
        problems.append(f"radio.tx_power ({p_s}) must be <= radio.max_tx_power ({p_max})")
    xi = v.get("radio.si_exponent", 0.0)
    if not 0 <= xi <= 1:
        problems.append(f"radio.si_exponent must lie in [0, 1] (got {xi})")
    return problems


def parse_scenario_values(raw: Mapping[str, Any]) -> tuple:
    """Parse raw text values; returns (parsed values, parse problems)."""
    parsed: Dict[str, Any] = {}
    problems: List[str] = []
    for key, (parser, default) in SCENARIO_FIELDS.items():
        if default is not None:
            parsed[key] = parser(default)
    for raw_key, raw_value in raw.items():
        try:
            key = canonical_key(raw_key)
        except KeyError as e:
            problems.append(str(e.args[0]))
            continue
        if raw_value is None or (isinstance(raw_value, str) and not raw_value.strip()):
            problems.append(f"{key} has no value")
            continue
        try:
            parsed[key] = _parse_value(key, raw_value)
        except ValueError as e:
            problems.append(f"{key}: {e}")
    return parsed, problems


def build_network_config(parsed: Mapping[str, Any]) -> NetworkConfig:
    nested: Dict[str, Any] = {"pu": {}, "mac": {}, "radio": {}, "options": {}}
    for key, value in parsed.items():
        if "." in key:
            section, leaf = key.split(".", 1)
            nested[section][leaf] = value
        else:
            nested[key] = value
    try:
        return NetworkConfig.model_validate(nested)
    except ValidationError as e:
        raise ConfigurationError(
            [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        ) from e


def read_scenario_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Raw KEY=VALUE pairs of a scenario file; bare names are also looked up in SCENARIO_DIR."""
    path = Path(path)
    if not path.exists() and (settings.SCENARIO_DIR / path).exists():
        path = settings.SCENARIO_DIR / path
    if not path.exists():
        raise ConfigurationError([f"scenario file '{path}' not found"])
    raw = dict(dotenv_values(path))
    logger.info(f"Loaded {len(raw)} scenario keys from {path.name}")
    return raw


def load_scenario(path: Optional[Union[str, Path]] = None,
                  overrides: Optional[Mapping[str, Any]] = None,
                  strict: bool = True) -> NetworkConfig:
    """
    Load a scenario from a flat KEY=VALUE file.

    Args:
        path: Scenario file; None starts from the built-in defaults
        overrides: Extra key/values applied after the file (text with units, or SI numbers)
        strict: Raise on any violated invariant (otherwise only pydantic checks apply)

    Returns:
        Validated NetworkConfig

    Raises:
        ConfigurationError: listing every problem found
    """
    raw = read_scenario_file(path) if path is not None else {}
    if overrides:
        raw.update(overrides)

    parsed, problems = parse_scenario_values(raw)
    if strict:
        problems.extend(collect_violations(parsed))
    if problems:
        raise ConfigurationError(problems)
    return build_network_config(parsed)


def default_scenario(**overrides: Any) -> NetworkConfig:
    """The numerical-results default network; keyword overrides use bare or dotted names."""
    return load_scenario(None, overrides={k.replace("__", "."): v for k, v in overrides.items()},
                         strict=False)


def scenario_to_flat(cfg: NetworkConfig) -> Dict[str, Any]:
    """Ordered flat provenance mapping in SI / linear units."""
    dumped = cfg.model_dump()
    flat: Dict[str, Any] = {}
    for key in SCENARIO_FIELDS:
        node: Any = dumped
        for part in key.split("."):
            node = node[part]
        flat[key] = node
    return flat


def scenario_to_text(cfg: NetworkConfig) -> str:
    """Render a scenario back into the KEY=VALUE file format (with units)."""
    lines = []
    for key, value in scenario_to_flat(cfg).items():
        parser = SCENARIO_FIELDS[key][0]
        if parser is parse_duration:
            text = format_duration(value)
        elif parser is parse_power:
            text = format_power(value)
        elif parser is parse_frequency:
            text = f"{value:.12g}Hz"
        else:
            text = str(value).lower() if isinstance(value, bool) else str(value)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"
