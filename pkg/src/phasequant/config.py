"""
Configuration management for phasequant.
Loads PHASEQUANT_* environment variables and sets up logging.
"""
import logging
import sys
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG", "NOTSET")


class Settings(BaseSettings):
    """Process-wide defaults, overridable per run by config files and CLI flags."""

    log: str = Field(default="WARNING", description="Log level (PHASEQUANT_LOG)")
    rel_tol: float = Field(default=1e-10, gt=0, lt=1, description="Quadrature tolerance")
    root_rel_tol: float = Field(default=1e-12, gt=0, lt=1, description="Root refinement tolerance")
    scan_samples: int = Field(default=2048, ge=2, description="Turning-point scan resolution")
    workers: int = Field(default=1, ge=1, description="Thread fan-out for spectra and sweeps")
    host: str = Field(default="127.0.0.1")
    port: int = Field(default=8000)

    model_config = SettingsConfigDict(
        env_prefix="PHASEQUANT_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Accept stdlib level names in any case."""
        level = v.strip().upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"PHASEQUANT_LOG must be a logging level name, got '{v}'")
        return level


def get_settings() -> Settings:
    """Get or create the global settings instance."""
    global settings
    if settings is None:
        settings = Settings()
    return settings


def reset_settings() -> Settings:
    """Re-read the environment into a fresh global instance."""
    global settings
    settings = Settings()
    return settings


_logging_configured = False


def configure_logging(level: Optional[str] = None) -> None:
    """Attach a stderr handler to the package logger once; later calls only change the level."""
    global _logging_configured
    logger = logging.getLogger(__package__)
    if not _logging_configured:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
        _logging_configured = True
    logger.setLevel(level or get_settings().log)


# Initialize settings on import (but allow it to fail gracefully for tests)
try:
    settings: Optional[Settings] = Settings()
except Exception:
    # A malformed environment is reported when get_settings() is first used
    settings = None
