"""
SHAPCA Configuration
Loads process-level settings from environment variables
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load .env file from project root
env_path = Path(__file__).parent.parent / ".env"
load_dotenv(env_path)


class Settings:
    # Logging
    LOG_LEVEL: str = os.getenv("SHAPCA_LOG_LEVEL", "INFO")
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Parallelism (overridden by --workers / run config)
    WORKERS: int = int(os.getenv("SHAPCA_WORKERS", "1"))

    # Run journal written into every output directory
    RUN_LOG_NAME: str = os.getenv("SHAPCA_RUN_LOG", "run_log.json")

    # Explainer cost guards
    KERNEL_MAX_EXHAUSTIVE: int = int(os.getenv("SHAPCA_KERNEL_MAX_EXHAUSTIVE", "25"))
    BRUTE_FORCE_MAX: int = int(os.getenv("SHAPCA_BRUTE_FORCE_MAX", "20"))

    # Kernel background selection
    BACKGROUND_FULL_MAX: int = int(os.getenv("SHAPCA_BACKGROUND_FULL_MAX", "200"))
    BACKGROUND_CENTROIDS: int = int(os.getenv("SHAPCA_BACKGROUND_CENTROIDS", "100"))

    # Sampled KernelSHAP: 2K + this many coalitions
    KERNEL_EXTRA_COALITIONS: int = 2048


settings = Settings()


def validate_settings():
    if settings.WORKERS < 1:
        raise ValueError("SHAPCA_WORKERS must be >= 1")
    if settings.KERNEL_MAX_EXHAUSTIVE < 1 or settings.BRUTE_FORCE_MAX < 1:
        raise ValueError("Explainer guards must be positive")
