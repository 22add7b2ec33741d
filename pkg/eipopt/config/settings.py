"""
Configuration settings for the EIP optimizer.

Uses Pydantic BaseSettings to load environment variables (prefix EIP_OPT_)
and an optional .env file. Every value has a default so the CLI works
without any environment.
"""

from typing import Optional

from pydantic import AliasChoices, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Application configuration loaded from environment variables.

    Environment variables use the EIP_OPT_ prefix, e.g. EIP_OPT_FIXPOINT_BUDGET.
    Verbosity is read from EIP_OPT_LOG.
    """

    model_config = SettingsConfigDict(
        env_prefix="EIP_OPT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ========================================================================
    # Application Configuration
    # ========================================================================
    environment: str = "development"
    log_level: str = Field(
        default="INFO",
        validation_alias=AliasChoices("EIP_OPT_LOG", "EIP_OPT_LOG_LEVEL"),
    )
    log_json: bool = False

    # ========================================================================
    # Rewrite Engine Configuration
    # ========================================================================
    fixpoint_budget: int = 10_000
    cloud_size_cap: int = 12
    test_mode: bool = False  # re-validate every DPO application

    # ========================================================================
    # Rule Parameters
    # ========================================================================
    bottleneck_ratio: float = 0.5
    min_parallel_factor: int = 2
    max_parallel_factor: int = 8
    failure_threshold: int = 3
    failure_rate_threshold: float = 0.5
    retry_cooldown_marker: str = "cooldownElapsed"

    # Runtime characteristics of generated forks and joins (msg/s)
    runtime_fork_throughput: Optional[float] = None
    runtime_join_throughput: Optional[float] = None


# ============================================================================
# Global Settings Instance
# ============================================================================

# Singleton settings instance - import this in other modules
settings = Settings()


# ============================================================================
# Helper Functions
# ============================================================================

def get_settings() -> Settings:
    """
    Get the application settings.

    Returns:
        Settings: The application settings instance.
    """
    return settings


def is_production() -> bool:
    """
    Check if the application is running in production mode.

    Returns:
        bool: True if in production, False otherwise.
    """
    return settings.environment.lower() == "production"


def is_development() -> bool:
    """
    Check if the application is running in development mode.

    Returns:
        bool: True if in development, False otherwise.
    """
    return settings.environment.lower() == "development"
