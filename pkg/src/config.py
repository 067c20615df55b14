"""Configuration management for the gSQG localization laboratory."""

import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic_settings import BaseSettings

# Load environment variables
load_dotenv()

# Project root directory
PROJECT_ROOT = Path(__file__).parent.parent


class Settings(BaseSettings):
    """Application settings."""

    # Application
    log_level: str = os.getenv("LOG_LEVEL", "INFO")
    code_version: str = os.getenv("GSQG_CODE_VERSION", "gsqg-lab 0.1.0")
    seed: int = int(os.getenv("GSQG_SEED", "20240601"))
    threads: int = int(os.getenv("GSQG_THREADS", "1"))

    # Numerics
    central_box_fraction: float = float(os.getenv("GSQG_CENTRAL_BOX_FRACTION", "0.125"))
    max_grid_n: int = int(os.getenv("GSQG_MAX_GRID_N", "1024"))
    collapse_threshold_factor: float = float(os.getenv("GSQG_COLLAPSE_THRESHOLD_FACTOR", "1e-6"))
    gibbs_tolerance_factor: float = float(os.getenv("GSQG_GIBBS_TOLERANCE_FACTOR", "1e-3"))
    cfl_number: float = float(os.getenv("GSQG_CFL", "0.5"))

    # Data directories
    output_dir: Path = Path(os.getenv("GSQG_OUTPUT_DIR", str(PROJECT_ROOT / "runs")))
    presets_dir: Path = PROJECT_ROOT / "presets"

    class Config:
        env_file = ".env"
        case_sensitive = False


# Global settings instance
settings = Settings()


def ensure_directories(*extra: Path) -> None:
    """Create output directories if they don't exist."""
    directories = [settings.output_dir, *extra]

    for directory in directories:
        directory.mkdir(parents=True, exist_ok=True)


if __name__ == "__main__":
    ensure_directories()
    print("\n✓ Configuration loaded successfully")
    print(f"  - Output dir: {settings.output_dir}")
    print(f"  - Threads: {settings.threads}")
    print(f"  - Max grid n: {settings.max_grid_n}")
