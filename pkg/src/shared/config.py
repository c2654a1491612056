"""
Runtime configuration loaded from environment variables.

Every tunable of the optimizer and the simulator lives here so that the CLI,
the use cases and the tests read one source of defaults.
"""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Application settings loaded from environment variables.

    All settings have defaults suitable for desk-scale runs. Command-line
    flags override them per invocation.
    """

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    # Environment
    environment: str = Field(default="local", description="local, qa or production")
    debug: bool = Field(default=False)

    # Logging
    log_level: str = Field(default="INFO")

    # Optimizer
    solver_time_limit_ms: int = Field(default=10_000, ge=1, description="Default ILP solve time limit")
    oracle_combination_limit: int = Field(default=10_000_000, ge=1, description="Brute-force plan bound")

    # Runtime
    epoch_length: int = Field(default=10, ge=1, description="Ticks per epoch")
    default_window: int = Field(default=50, ge=1, description="Window used when a relation omits one")
    hash_seed: int = Field(default=0xCBF29CE484222325, description="FNV-1a offset basis for routing")

    # Generators and benchmarks
    unbound_attribute_domain: int = Field(default=100, ge=1)
    bench_repetitions: int = Field(default=5, ge=1)
    generation_retry_factor: int = Field(default=50, ge=1)

    @property
    def is_production(self) -> bool:
        """Check if running in production environment."""
        return self.environment == "production"

    @property
    def is_local(self) -> bool:
        """Check if running in local development environment."""
        return self.environment == "local"


# Singleton instance for application-wide use
settings = Settings()
