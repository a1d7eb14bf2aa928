"""
Runtime configuration for the filtering benchmark.

Settings here control logging and parallelism only; they never change
numeric results, which depend solely on the bench config file and its seed.
"""

import logging
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings, read from EFKF_* environment variables or .env."""

    model_config = SettingsConfigDict(
        env_prefix="EFKF_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore"
    )

    # Logging Configuration
    LOG_LEVEL: str = Field(default="INFO", description="Root log level")
    LOG_FORMAT: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="logging format string"
    )
    LOG_FILE: Optional[Path] = Field(default=None, description="Optional log file")

    # Execution
    DEFAULT_WORKERS: int = Field(default=1, ge=1, description="Worker threads when neither CLI nor config set one")


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """
    Get application settings.

    Returns:
        Settings instance
    """
    global _settings

    if _settings is None:
        _settings = Settings()

    return _settings


def configure_logging(settings: Optional[Settings] = None, level: Optional[str] = None) -> None:
    """
    Configure application logging.

    Args:
        settings: Optional settings instance
        level: Level overriding settings.LOG_LEVEL
    """
    if settings is None:
        settings = get_settings()

    level_name = (level or settings.LOG_LEVEL).upper()
    log_level = logging.getLevelName(level_name)
    if not isinstance(log_level, int):
        log_level = logging.INFO

    handlers = [logging.StreamHandler()]
    if settings.LOG_FILE is not None:
        settings.LOG_FILE.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(settings.LOG_FILE, encoding="utf-8"))

    logging.basicConfig(level=log_level, format=settings.LOG_FORMAT, handlers=handlers, force=True)

    # Set third-party loggers to WARNING to reduce noise
    logging.getLogger("asyncio").setLevel(logging.WARNING)

    logging.debug(f"Logging configured at level: {level_name}")
