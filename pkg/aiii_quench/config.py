"""
Environment settings and run-configuration loading.

Resolution order for a run: built-in defaults < JSON file < command-line
overrides. The environment only supplies the default output directory and
the log level.
"""

import json
import logging
from pathlib import Path
from typing import Any

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

from aiii_quench.schemas import RunConfig

logger = logging.getLogger(__name__)


class ConfigFileError(ValueError):
    """Raised when a configuration file cannot be read or parsed"""
    pass


class Settings(BaseSettings):
    """Process-level settings read from AIII_QUENCH_* variables"""
    model_config = SettingsConfigDict(env_prefix="AIII_QUENCH_", extra="ignore")

    out_dir: str = "results"
    log_level: str = "INFO"


def get_settings() -> Settings:
    """Load .env (if present) and read settings from the environment."""
    load_dotenv()
    return Settings()


def _deep_merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def read_config_file(path: str | Path) -> dict[str, Any]:
    """
    Read a JSON run configuration.

    Raises:
        ConfigFileError: When the file is missing, unreadable or not a JSON object
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigFileError(f"Cannot read config file {path}: {e.strerror or e}") from e
    except json.JSONDecodeError as e:
        raise ConfigFileError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigFileError(f"Config file {path} must contain a JSON object")
    return data


def load_run_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """
    Build a validated RunConfig.

    Args:
        path: Optional JSON file
        overrides: Nested dict of command-line values, applied last

    Raises:
        ConfigFileError: For unreadable files
        pydantic.ValidationError: For invalid values
    """
    data: dict[str, Any] = {}
    if path is not None:
        data = read_config_file(path)
        logger.debug(f"Loaded config file {path}")
    if overrides:
        data = _deep_merge(data, overrides)
    return RunConfig.model_validate(data)


def resolve_out_dir(config: RunConfig, settings: Settings | None = None) -> Path:
    if config.out_dir:
        return Path(config.out_dir)
    settings = settings or get_settings()
    return Path(settings.out_dir)
