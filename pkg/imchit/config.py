"""
Configuration module for imc-hit
Environment-driven settings and logging setup
"""

import os
import sys
from functools import lru_cache

from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, Field, field_validator

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {name}:{function} - {message}"


class Settings(BaseModel):
    """Process-wide knobs, read from IMC_HIT_* environment variables"""

    threads: int = Field(default=1, ge=1)
    log_level: str = "WARNING"
    combo_limit: int = Field(default=100_000, ge=1)

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, value: str) -> str:
        value = value.upper()
        if value not in {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level: {value}")
        return value

    @classmethod
    def from_env(cls) -> "Settings":
        """
        Build settings from the environment, loading a .env file first if present

        Returns:
            Validated Settings instance
        """
        load_dotenv()
        values = {}
        if os.getenv("IMC_HIT_THREADS"):
            values["threads"] = int(os.environ["IMC_HIT_THREADS"])
        if os.getenv("IMC_HIT_LOG_LEVEL"):
            values["log_level"] = os.environ["IMC_HIT_LOG_LEVEL"]
        if os.getenv("IMC_HIT_COMBO_LIMIT"):
            values["combo_limit"] = int(os.environ["IMC_HIT_COMBO_LIMIT"])
        return cls(**values)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Cached settings for library code that has no explicit configuration"""
    return Settings.from_env()


def configure_logging(level: str = "WARNING") -> None:
    """Route loguru output to a single stderr sink at the given level"""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT)
