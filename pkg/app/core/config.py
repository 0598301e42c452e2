"""
Configuration management for the lead/lag tracking toolkit.
Centralizes process-wide settings with environment variable support.

Run-specific parameters (gains, vehicle, alignment) live in the run
configuration document, see app.core.run_config.
"""

import logging
import os
from pathlib import Path
from typing import Any, List

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class ConfigMeta(type):
    """Metaclass to make Config class attributes immutable."""

    def __setattr__(cls, name: str, value: Any) -> None:
        """Prevent modification of configuration class attributes."""
        raise AttributeError(f"Configuration attribute '{name}' is read-only and cannot be modified")


class Config(metaclass=ConfigMeta):
    """Central configuration for the toolkit."""

    # ═══════════════════════════════════════════════════════════════════════
    # LOGGING
    # ═══════════════════════════════════════════════════════════════════════
    LOG_LEVEL: str = os.getenv("LEADLAG_LOG_LEVEL", "INFO")
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # ═══════════════════════════════════════════════════════════════════════
    # OUTPUT AND RUN DEFAULTS
    # ═══════════════════════════════════════════════════════════════════════
    OUTPUT_DIR: str = os.getenv("LEADLAG_OUTPUT_DIR", "./runs")
    DEFAULT_SEED: int = 42
    BATCH_WORKERS: int = 4

    # Artifact formats
    FORMAT_VERSION: str = "1.0"
    TRAJECTORY_COLUMNS: List[str] = ["t", "x", "y", "v", "heading"]
    CENTERLINE_COLUMNS: List[str] = ["station", "x", "y"]

    # CLI exit codes
    EXIT_OK: int = 0
    EXIT_CONFIG: int = 2
    EXIT_INPUT: int = 3
    EXIT_DIVERGENCE: int = 4

    @classmethod
    def get_log_level(cls) -> int:
        """Get the numeric log level; unknown names fall back to INFO."""
        name = (os.getenv("LEADLAG_LOG_LEVEL") or cls.LOG_LEVEL).upper()
        level = logging.getLevelName(name)
        return level if isinstance(level, int) else logging.INFO

    @classmethod
    def get_output_dir(cls) -> Path:
        """Get the default output directory."""
        out = os.getenv("LEADLAG_OUTPUT_DIR") or ""
        return Path(out if out else cls.OUTPUT_DIR)

    @classmethod
    def get_default_seed(cls) -> int:
        """Get the seed used when neither the run config nor the CLI sets one."""
        try:
            seed_str = os.getenv("LEADLAG_DEFAULT_SEED") or ""
            if not seed_str:
                return cls.DEFAULT_SEED
            return int(seed_str)
        except ValueError as e:
            raise ValueError("Invalid LEADLAG_DEFAULT_SEED: must be an integer") from e

    @classmethod
    def get_batch_workers(cls) -> int:
        """Get the number of worker threads for batch runs."""
        try:
            workers_str = os.getenv("LEADLAG_BATCH_WORKERS") or ""
            if not workers_str:
                return cls.BATCH_WORKERS
            workers = int(workers_str)
            if workers <= 0:
                raise ValueError("Invalid LEADLAG_BATCH_WORKERS: must be greater than 0")
            return workers
        except ValueError as e:
            raise ValueError("Invalid LEADLAG_BATCH_WORKERS: must be a positive integer") from e

    @classmethod
    def ensure_output_dir(cls, path: Path = None) -> Path:
        """Ensure an output directory exists and return it."""
        out = Path(path) if path is not None else cls.get_output_dir()
        out.mkdir(parents=True, exist_ok=True)
        return out

    @classmethod
    def validate_config(cls) -> None:
        """
        Validate environment-driven settings.
        Raises ValueError listing every invalid setting.
        """
        errors = []

        if not isinstance(logging.getLevelName(cls.LOG_LEVEL.upper()), int):
            errors.append(f"LEADLAG_LOG_LEVEL must be a logging level name, got {cls.LOG_LEVEL}")

        for getter in (cls.get_default_seed, cls.get_batch_workers):
            try:
                getter()
            except ValueError as e:
                errors.append(str(e))

        if errors:
            error_msg = "Configuration validation failed:\n" + "\n".join(f"  - {e}" for e in errors)
            raise ValueError(error_msg)
