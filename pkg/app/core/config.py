from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import field_validator
from typing import List, Union


class Settings(BaseSettings):
    APP_NAME: str = "FHR"
    APP_VERSION: str = "0.1.0"
    APP_ENV: str = "dev"  # dev | ci | prod

    # Logging configuration
    LOG_LEVEL: str = "INFO"
    LOG_TARGETS: Union[str, List[str]] = "console"
    LOG_DIR: str = "logs"
    LOG_FILE_PATH: str = "logs/fhr.log"
    LOG_RETENTION_DAYS: int = 7

    # Simulation
    DEFAULT_SEED: int = 20240101
    DEFAULT_N: int = 1_000_000
    CHUNK_SIZE: int = 50_000
    WORKERS: int = 4

    # Numerics
    MC_SE_TOL: float = 4.0
    COND_LIMIT: float = 1e12
    FD_REL_STEP: float = 1e-5
    NEWTON_TOL: float = 1e-10
    NEWTON_MAX_ITER: int = 50
    NEWTON_MAX_HALVINGS: int = 20

    # Output
    CSV_SIG_DIGITS: int = 17

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

    # Comma-separated value parser
    @field_validator("LOG_TARGETS", mode="before")
    def parse_log_targets(cls, v):
        if isinstance(v, str):
            return [x.strip() for x in v.split(",") if x.strip()]
        elif isinstance(v, list):
            return v
        return ["console"]

    @field_validator("CHUNK_SIZE", "WORKERS", "NEWTON_MAX_ITER")
    def positive_int(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v


settings = Settings()
