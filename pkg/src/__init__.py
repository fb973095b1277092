"""
Full-duplex cognitive MAC: analysis, simulation and configuration search
"""

# Lazy imports so that light entry points (scenario checks) do not load
# the numerical stack

__version__ = "1.0.0"

_EXPORTS = {
    "NetworkConfig": "src.schemas",
    "SensingCalibration": "src.schemas",
    "ThroughputReport": "src.schemas",
    "OptimizationResult": "src.schemas",
    "SimStats": "src.schemas",
    "SweepSpec": "src.schemas",
    "load_scenario": "src.model.scenario",
    "default_scenario": "src.model.scenario",
    "calibrate_threshold": "src.sensing.calibration",
    "normalized_throughput": "src.analysis.engine",
    "conditional_throughput": "src.analysis.engine",
    "optimize": "src.optimizer.search",
    "run_fd": "src.simulator.mac",
    "run_hd": "src.simulator.mac",
    "run_experiment": "src.experiments.sweep",
    "crossval": "src.experiments.crossval",
    "validate": "src.experiments.validation",
}


def __getattr__(name):
    """Lazy load heavy imports only when accessed"""
    if name in _EXPORTS:
        from importlib import import_module

        return getattr(import_module(_EXPORTS[name]), name)
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")


__all__ = list(_EXPORTS)
