from pydantic_settings import BaseSettings
from typing import Optional
import os
import logging

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    # Environment
    environment: str = "development"
    debug: bool = False
    log_level: str = "INFO"
    log_to_file: bool = False
    log_dir: str = "logs"

    # Service identity
    service_name: str = "relevant-excess"
    service_version: str = "1.0.0"

    # Smoothing
    default_kernel: str = "epanechnikov"
    gcv_candidates: int = 15
    gcv_min_bandwidth: float = 0.05
    gcv_max_bandwidth: float = 0.4
    band_width: Optional[int] = None  # banded covariance lag, default floor(n^(1/3))

    # Excess measures
    relative_floor: float = 1e-8
    oracle_grid_size: int = 100000
    oracle_h_d: float = 1e-4

    # Long-run variance
    lrv_ise_points: int = 101
    lrv_tau_candidates: int = 10

    # Monte Carlo
    mc_draws: int = 2000
    min_replications: int = 100

    # Performance settings
    max_workers: int = 4

    # Output
    float_format: str = "%.17g"

    class Config:
        env_file = ".env"
        case_sensitive = False

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self._validate_configuration()

    def _validate_configuration(self):
        """Validate critical configuration values"""
        try:
            if not isinstance(logging.getLevelName(self.log_level.upper()), int):
                raise ValueError(f"LOG_LEVEL '{self.log_level}' is not a logging level")

            if not (0 < self.gcv_min_bandwidth < self.gcv_max_bandwidth < 1):
                raise ValueError("GCV bandwidth range must satisfy 0 < min < max < 1")

            if self.gcv_candidates < 1:
                raise ValueError("GCV_CANDIDATES must be positive")

            if self.band_width is not None and self.band_width < 0:
                raise ValueError("BAND_WIDTH must be nonnegative")

            if self.max_workers < 1:
                raise ValueError("MAX_WORKERS must be at least 1")

            if self.lrv_ise_points < 2 or self.lrv_tau_candidates < 5:
                raise ValueError("LRV grids are too small for minimal volatility selection")

            if self.mc_draws < 1000:
                logger.warning("MC_DRAWS below 1000 gives unstable multivariate quantiles")

            if self.log_to_file and self.environment != "test":
                os.makedirs(self.log_dir, exist_ok=True)

        except Exception as e:
            logger.error(f"Configuration validation failed: {e}")
            raise


# Create global settings instance
settings = Settings()
