"""
Configuration management for the solver.

Uses Pydantic Settings to load configuration from environment variables
(prefix MFP_) and an optional .env file. Run-specific hyperparameters live
in the JSON experiment configs, not here.
"""

from functools import lru_cache
from typing import Literal, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Solver configuration loaded from environment variables.

    Environment variables should be defined in .env file or system environment.
    See docs/cli.md for detailed documentation.
    """

    # Output directory override (MFP_OUT)
    mfp_out: Optional[str] = None

    # Worker pool size when --jobs is not given
    mfp_jobs: int = 1

    # Evaluation on large grids is chunked to bound memory of the jet tensors
    mfp_eval_chunk: int = 50_000

    # Divergence guard for every training stage
    mfp_divergence_threshold: float = 1e12

    # Console output
    mfp_progress_every: int = 1000  # 0 disables per-epoch progress lines
    mfp_log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    def validate_runtime(self) -> None:
        """
        Validate settings that have no safe fallback.

        Raises:
            ValueError: If a size or threshold is not positive.
        """
        if self.mfp_jobs < 1:
            raise ValueError("MFP_JOBS must be at least 1")
        if self.mfp_eval_chunk < 1:
            raise ValueError("MFP_EVAL_CHUNK must be at least 1")
        if not self.mfp_divergence_threshold > 0:
            raise ValueError("MFP_DIVERGENCE_THRESHOLD must be positive")


@lru_cache
def get_settings() -> Settings:
    """
    Get cached settings instance.

    Cache can be cleared with get_settings.cache_clear() for testing.

    Returns:
        Settings: The cached settings instance.
    """
    return Settings()
