import os
from dotenv import load_dotenv
from pydantic import BaseModel, field_validator
from typing import List

from app import __version__

# Load environment variables from .env file
load_dotenv()


def _env_float(name: str, default: str) -> float:
    return float(os.getenv(name, default))


def _env_int(name: str, default: str) -> int:
    return int(os.getenv(name, default))


class Settings(BaseModel):
    # App settings
    APP_NAME: str = "Gaussian Measurement Toolkit"
    APP_VERSION: str = __version__
    APP_DESCRIPTION: str = (
        "Validity, classification, informational completeness and simulation "
        "of Gaussian quantum measurements"
    )

    # Environment
    ENVIRONMENT: str = os.getenv("ENVIRONMENT", "development")
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # CORS
    CORS_ORIGINS: List[str] = [o for o in os.getenv("CORS_ORIGINS", "*").split(",") if o]

    # Numerics
    DEFAULT_TOL: float = _env_float("DEFAULT_TOL", "1e-9")
    FOCK_CUTOFF: int = _env_int("FOCK_CUTOFF", "40")
    TRUNCATION_WARN_THRESHOLD: float = _env_float("TRUNCATION_WARN_THRESHOLD", "1e-3")

    # Density probes
    PROBE_GRID_SIZE: int = _env_int("PROBE_GRID_SIZE", "10000")
    ZERO_THRESHOLD: float = _env_float("ZERO_THRESHOLD", "1e-8")
    BOSONIC_GRID_POINTS: int = _env_int("BOSONIC_GRID_POINTS", "101")
    BOSONIC_GRID_HALF_WIDTH: float = _env_float("BOSONIC_GRID_HALF_WIDTH", "4.0")

    # Non-uniqueness witnesses
    WITNESS_BASE_VARIANCE: float = _env_float("WITNESS_BASE_VARIANCE", "2.0")

    # Converse channel: P-quadrature noise is doubled at most this many times
    CONVERSE_NOISE_DOUBLINGS: int = _env_int("CONVERSE_NOISE_DOUBLINGS", "64")

    # Problem files
    PROBLEM_VERSIONS: List[str] = ["1.0"]

    # Testing
    TESTING: bool = os.getenv("TESTING", "False").lower() in ("true", "1", "t")

    @field_validator("WITNESS_BASE_VARIANCE")
    @classmethod
    def _witness_base_is_mixed(cls, value: float) -> float:
        # the witness perturbs a thermal state V = σ·I, which needs σ > 1
        if value <= 1.0:
            raise ValueError(f"WITNESS_BASE_VARIANCE must exceed 1, got {value}")
        return value


# Create settings instance
settings = Settings()
