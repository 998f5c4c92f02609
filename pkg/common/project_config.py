"""
Project-level Configuration Module

This module centralizes process-wide settings of the simulator: how many
worker processes run replications, where logs and result files go, and how
verbose the console is. Simulation parameters themselves live in config files
parsed by ``socialdsa.config_file``.

Loading order (highest to lowest precedence):
1. Environment variables
2. .env file in project root
3. Default values in this file
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Mapping

from dotenv import dotenv_values

from .utils.file_sys_utils import get_script_directory

TRUE_VALUES = ("true", "1", "yes", "on")
VALID_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class ProjectConfig:
    workers: int
    log_dir: Path
    log_to_file: bool
    console_level: str
    results_dir: Path

    @classmethod
    def load(cls, environ: Optional[Mapping[str, str]] = None, env_file: Optional[Path] = None) -> "ProjectConfig":
        """
        Load project-level configuration with precedence env > .env > defaults.

        Recognized keys: ``SOCIAL_DSA_WORKERS``, ``SOCIAL_DSA_LOG_DIR``,
        ``SOCIAL_DSA_LOG_TO_FILE``, ``SOCIAL_DSA_CONSOLE_LEVEL`` and
        ``SOCIAL_DSA_RESULTS_DIR``. An absent or empty worker count means one
        worker per available processor.

        Args:
            environ: Environment mapping, ``os.environ`` by default
            env_file: Path of the .env file, ``<project root>/.env`` by default

        Raises:
            ValueError: If a worker count or log level cannot be interpreted
        """
        environ = os.environ if environ is None else environ
        root = get_script_directory()
        env_file = root / ".env" if env_file is None else env_file

        settings = {}
        if env_file.exists():
            # values from the .env file never override the real environment
            settings.update({k: v for k, v in dotenv_values(env_file).items() if v is not None})
        settings.update({k: v for k, v in environ.items() if k.startswith("SOCIAL_DSA_")})

        workers_raw = settings.get("SOCIAL_DSA_WORKERS", "").strip()
        if workers_raw:
            try:
                workers = int(workers_raw)
            except ValueError:
                raise ValueError(f"SOCIAL_DSA_WORKERS must be an integer, got '{workers_raw}'")
            if workers < 1:
                raise ValueError(f"SOCIAL_DSA_WORKERS must be >= 1, got {workers}")
        else:
            workers = os.cpu_count() or 1

        console_level = settings.get("SOCIAL_DSA_CONSOLE_LEVEL", "INFO").strip().upper()
        if console_level not in VALID_LEVELS:
            raise ValueError(
                f"Invalid SOCIAL_DSA_CONSOLE_LEVEL: {console_level}. Must be one of {VALID_LEVELS}"
            )

        log_dir = Path(settings.get("SOCIAL_DSA_LOG_DIR") or root / "logs")
        results_dir = Path(settings.get("SOCIAL_DSA_RESULTS_DIR") or root / "results")
        log_to_file = settings.get("SOCIAL_DSA_LOG_TO_FILE", "true").strip().lower() in TRUE_VALUES

        return cls(
            workers=workers,
            log_dir=log_dir,
            log_to_file=log_to_file,
            console_level=console_level,
            results_dir=results_dir,
        )


# Global config instance
project_config = ProjectConfig.load()
