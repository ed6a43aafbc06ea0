"""
Run configuration loader
Precedence: command-line overrides > key=value config file > defaults.
"""

from pathlib import Path
from typing import Any

from dotenv import dotenv_values
from models.config import RunConfig
from pydantic import ValidationError

from utils.log_context import get_run_logger

logger = get_run_logger(__name__)

# Config-file / flag spellings that differ from the RunConfig field names
KEY_ALIASES = {"schema": "schema_name"}


class ConfigError(Exception):
    """Invalid or incomplete run configuration"""

    pass


def normalize_key(key: str) -> str:
    """'--n-folds' / 'N_FOLDS' / 'n-folds' -> 'n_folds'"""
    key = key.strip().lstrip("-").replace("-", "_").lower()
    return KEY_ALIASES.get(key, key)


def parse_override_args(args: list[str]) -> dict[str, str]:
    """
    Turn ['--n-folds', '3', '--lr=0.01'] into {'n_folds': '3', 'lr': '0.01'}

    Raises:
        ConfigError: flag without a value or stray positional argument
    """
    overrides: dict[str, str] = {}
    index = 0
    while index < len(args):
        arg = args[index]
        if not arg.startswith("--"):
            raise ConfigError(f"Unexpected argument '{arg}'")
        if "=" in arg:
            key, value = arg.split("=", 1)
            index += 1
        else:
            if index + 1 >= len(args):
                raise ConfigError(f"Flag '{arg}' needs a value")
            key, value = arg, args[index + 1]
            index += 2
        overrides[normalize_key(key)] = value
    return overrides


def read_config_file(path: str | Path) -> dict[str, str]:
    """Read a flat key=value UTF-8 file"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    values = dotenv_values(path, encoding="utf-8")
    return {
        normalize_key(key): value
        for key, value in values.items()
        if value is not None
    }


def load_run_config(
    config_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """
    Build the RunConfig for one command

    Raises:
        ConfigError: unknown keys, missing seed or invalid values
    """
    merged: dict[str, Any] = {}
    if config_path is not None:
        merged.update(read_config_file(config_path))
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[normalize_key(key)] = value

    if "seed" not in merged:
        raise ConfigError("A seed is required (--seed or seed= in config)")

    try:
        config = RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e

    logger.debug(f"Run configuration: {config.model_dump(mode='json')}")
    return config
