from .search import (
    ThroughputObjective,
    count_local_maxima,
    default_t_grid,
    default_w_candidates,
    golden_section_max,
    optimize,
    optimize_power,
    power_grid_scan,
    surface_scan,
    trace_order,
)

__all__ = [
    "ThroughputObjective",
    "count_local_maxima",
    "default_t_grid",
    "default_w_candidates",
    "golden_section_max",
    "optimize",
    "optimize_power",
    "power_grid_scan",
    "surface_scan",
    "trace_order",
]
