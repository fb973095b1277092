from pathlib import Path
from typing import Literal
from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Runtime settings for the FD cognitive MAC analysis and simulation toolkit."""

    # Project paths
    BASE_DIR: Path = Path(__file__).parent.parent
    SCENARIO_DIR: Path = BASE_DIR / "scenarios"

    # Analysis engine
    ANALYSIS_BACKEND: Literal["monte_carlo", "quadrature"] = Field(
        default="monte_carlo",
        description="Integration backend for the conditional throughput: monte_carlo or quadrature (rho <= 2 only)"
    )
    ANALYSIS_SAMPLES: int = Field(default=200_000, description="Monte Carlo samples per backoff term")
    ANALYSIS_BLOCK_SIZE: int = Field(default=20_000, description="Samples per counter-seeded block")
    ANALYSIS_OFFSET_NODES: int = Field(
        default=0,
        description="0 = evaluate every backoff slot exactly; N > 0 = spline over N overhead nodes"
    )
    FIRST_IDLE_SAMPLING: Literal["fresh", "residual"] = Field(
        default="fresh",
        description="First idle period drawn fresh at the reservation start, or as a stationary residual"
    )
    COUNT_FIRST_FRAGMENT: bool = Field(
        default=True,
        description="Count the bits of fragment 1 (False = sum over successors of idle verdicts only)"
    )
    PROB_IDLE_USES_SHIFT: bool = Field(
        default=True,
        description="Include the T_min shifts in the mean durations used for P(H0)"
    )
    RECEIVER_SELF_INTERFERENCE: bool = Field(
        default=True,
        description="SU receiver SINR includes the self-interference I"
    )
    MAX_FRAGMENTS: int = Field(default=12, description="Cap on K for pattern/outcome enumeration")

    # Numerical tolerances
    QUAD_ABS_TOL: float = 1e-9
    CALIBRATION_TOL: float = 1e-8
    CALIBRATION_MAX_EXPANSIONS: int = 60

    # Optimizer
    POWER_SEARCH_MIN_DB: float = Field(default=-10.0, description="Lower end of the power search (dB)")
    POWER_SEARCH_TOL_DB: float = 0.05
    POWER_REFINE_POINTS: int = 5
    POWER_GRID_POINTS: int = Field(default=9, description="Coarse dB grid bracketing the power search")
    T_GRID_POINTS: int = 21
    T_SEARCH_TOL: float = Field(default=2e-4, description="Golden-section tolerance on T (seconds)")
    OPTIMIZER_CACHE_SIZE: int = 4096
    OPTIMIZER_OFFSET_NODES: int = Field(
        default=24,
        description="Overhead spline nodes used while searching; the returned optimum is re-evaluated exactly"
    )
    OPTIMIZER_SAMPLES: int = Field(default=50_000, description="Monte Carlo samples per objective evaluation")

    # Simulator
    SIM_WARMUP_CYCLES: int = 100
    SIM_INCLUDE_ACK: bool = False
    SIM_ACK: float = Field(default=304e-6, description="ACK duration (seconds) when SIM_INCLUDE_ACK is on")
    SIM_PERSISTENT_BACKOFF: bool = Field(
        default=False,
        description="Losers keep residual counters across rounds (classic DCF) instead of redrawing"
    )

    # Reproducibility / execution
    SEED: int = 12345
    WORKERS: int = Field(default=1, description="Worker threads for blocks, grid points and replications")
    SHOW_PROGRESS: bool = True

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = "fdmac.log"

    class Config:
        env_file = ".env"
        env_file_encoding = 'utf-8'
        case_sensitive = True
        extra = 'ignore'


# Global settings instance
settings = Settings()
