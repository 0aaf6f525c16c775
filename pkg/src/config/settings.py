"""Configuration management for the modified Kolmogorov toolkit."""

import logging
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application Configuration
    app_name: str = Field(
        default="Modified Kolmogorov",
        description="Application name"
    )
    app_version: str = Field(
        default="0.1.0",
        description="Application version"
    )
    debug: bool = Field(
        default=False,
        description="Enable debug mode"
    )
    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)"
    )
    log_file: Optional[str] = Field(
        default=None,
        description="Optional log file path"
    )

    # Operator Algebra Configuration
    max_bandwidth: int = Field(
        default=256,
        ge=1,
        description="Bandwidth cap K_max for coefficient products"
    )

    # Expansion Configuration
    max_expansion_order: int = Field(
        default=6,
        ge=0,
        description="Largest accepted expansion order N"
    )
    default_expansion_order: int = Field(
        default=4,
        ge=0,
        description="Expansion order used when a study does not set one"
    )
    measure_order_cap: int = Field(
        default=3,
        ge=0,
        description="Largest order of the invariant-measure expansion"
    )

    # Solver Configuration
    spectral_bandwidth: int = Field(
        default=32,
        ge=8,
        description="Galerkin truncation K"
    )
    solve_tol: float = Field(
        default=1e-10,
        gt=0,
        description="Linear-solve residual bound"
    )
    quad_points: int = Field(
        default=40,
        ge=20,
        description="Gauss-Hermite nodes for the transition kernel"
    )

    # Output Configuration
    output_dir: str = Field(
        default="./results",
        description="Default directory for reports, tables and plot scripts"
    )

    @field_validator("log_level")
    @classmethod
    def check_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in getattr(logging, "getLevelNamesMapping", lambda: dict(logging._nameToLevel))():
            raise ValueError(f"unknown log level {v!r}")
        return level


def get_settings() -> Settings:
    """Get application settings.

    Returns:
        Settings: Application settings instance.
    """
    return Settings()
