from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application configuration settings."""

    model_config = SettingsConfigDict(
        env_prefix="MCBLAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # App settings
    app_name: str = "mcblab"
    version: str = "1.0.0"
    log_level: str = "INFO"

    # Seeding and parallelism
    seed: int = 2017
    workers: int = 1
    block_size: int = 64

    # Simulation defaults
    step_size: float = 0.01
    reference_step_size: float = 1e-3
    delta: float = 1e-3
    recompute_period: int = 10_000
    max_steps: int = 50_000_000

    # Quadrature
    quad_abs_tol: float = 1e-10
    quad_limit: int = 200

    # Output settings
    out_dir: str = "mcblab-out"


@lru_cache()
def get_settings() -> Settings:
    return Settings()
