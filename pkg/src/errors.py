"""
Exception hierarchy shared by every module.
"""

from typing import List, Optional


class FdMacError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(FdMacError):
    """Invalid scenario; carries every violated constraint, not just the first."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid configuration")


class CalibrationError(FdMacError):
    """Detection target unreachable for the given (T, P_s)."""

    def __init__(self, message: str, fragment_time: Optional[float] = None,
                 tx_power: Optional[float] = None):
        self.fragment_time = fragment_time
        self.tx_power = tx_power
        super().__init__(message)


class IntegrationError(FdMacError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float):
        self.error_estimate = error_estimate
        super().__init__(f"{message} (error estimate {error_estimate:.3e})")


class OptimizationError(FdMacError):
    """No feasible point in the searched configuration space."""


class SimulationError(FdMacError):
    """Simulation could not produce statistics (e.g. horizon too short)."""


class ExperimentError(FdMacError):
    """A sweep point failed; the message names the point."""

    def __init__(self, point: str, cause: Exception):
        self.point = point
        self.cause = cause
        super().__init__(f"sweep point {point} failed: {cause}")
