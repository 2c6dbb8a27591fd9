"""
Configuration settings for the fluid-antenna DOA toolkit.

This module handles environment variables and process-level defaults using
pydantic-settings and python-dotenv, and installs the loguru sink used by
every other module.
"""
import sys

from dotenv import load_dotenv
from loguru import logger
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .models import check_grid_step


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Estimator defaults
    grid_step_deg: float = Field(
        default=0.05,
        gt=0.0,
        le=1.0,
        description="MUSIC search grid step in degrees"
    )
    nystrom_fraction: float = Field(
        default=0.5,
        gt=0.0,
        le=1.0,
        description="Nystrom subset size as a fraction of the covariance dimension"
    )

    # Monte-Carlo harness
    default_trials: int = Field(default=500, ge=1, description="Trials per sweep point")
    master_seed: int = Field(default=2024, ge=0, description="Master seed for all substreams")
    workers: int = Field(default=1, ge=1, description="Worker processes for trial fan-out")
    output_dir: str = Field(default="./results", description="Directory for CSV/JSON outputs")

    # Application Settings
    log_level: str = Field(default="INFO", description="Log level")
    debug: bool = Field(default=False, description="Debug mode")

    @field_validator("grid_step_deg")
    @classmethod
    def _check_grid_step(cls, value: float) -> float:
        return check_grid_step(value)


def load_settings() -> Settings:
    """Load settings with proper error handling and environment loading."""
    load_dotenv()

    try:
        return Settings()
    except Exception as e:
        error_msg = f"Failed to load settings: {e}"
        if "workers" in str(e).lower():
            error_msg += "\nWORKERS must be a positive integer"
        if "grid_step_deg" in str(e).lower():
            error_msg += "\nGRID_STEP_DEG must divide 180 degrees"
        raise ValueError(error_msg) from e


def configure_logging(settings: Settings) -> None:
    """Replace loguru's default sink with one stderr sink at the configured level."""
    level = "DEBUG" if settings.debug else settings.log_level.upper()
    logger.remove()
    logger.add(
        sys.stderr,
        level=level,
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | "
               "<cyan>{name}</cyan> - <level>{message}</level>",
    )
