import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from constants import API_RATE_LIMIT, DEFAULT_SEED, MAX_SOLVER_DEGREE, Command
from utils.errors import DomainError
from utils.schemas import RunConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

load_dotenv()

HZ_SEED = int(os.getenv("HZ_SEED", DEFAULT_SEED))
HZ_LOG_LEVEL = os.getenv("HZ_LOG_LEVEL", "INFO")
HZ_MAX_DEGREE = int(os.getenv("HZ_MAX_DEGREE", MAX_SOLVER_DEGREE))
HZ_RATE_LIMIT = os.getenv("HZ_RATE_LIMIT", API_RATE_LIMIT)
HZ_ALLOWED_ORIGINS = [
    origin.strip()
    for origin in os.getenv("HZ_ALLOWED_ORIGINS", "http://localhost:3000").split(",")
    if origin.strip()
]

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# defaults that differ per command; config files and flags still override them
COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    Command.LEMNISCATE.value: {"trials": 1},
}


def configure_logging(level: str = HZ_LOG_LEVEL) -> None:
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, stream=sys.stderr, force=True)


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """Read a TOML or JSON run configuration; the suffix picks the parser."""
    if not path:
        return {}
    config_path = Path(path)
    if not config_path.is_file():
        raise DomainError(f"config file not found: {path}")
    try:
        if config_path.suffix.lower() == ".toml":
            with config_path.open("rb") as handle:
                return tomllib.load(handle)
        if config_path.suffix.lower() == ".json":
            with config_path.open("r", encoding="utf-8") as handle:
                return json.load(handle)
    except ValueError as exc:
        raise DomainError(f"cannot parse {path}: {exc}") from exc
    raise DomainError(f"unsupported config format {config_path.suffix!r} (use .toml or .json)")


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def resolve_run_config(command: str, flags: Dict[str, Any], config_path: Optional[str] = None) -> RunConfig:
    """CLI flags > config file > environment > built-in defaults.

    `flags` holds only the options given explicitly on the command line (None means unset).
    """
    resolved: Dict[str, Any] = {
        "seed": HZ_SEED,
        "log_level": HZ_LOG_LEVEL,
        "solver": {"max_degree": HZ_MAX_DEGREE},
    }
    resolved = _merge(resolved, COMMAND_DEFAULTS.get(command, {}))
    file_values = load_config_file(config_path)
    # a config file may hold one table per command on top of shared keys
    command_names = {c.value for c in Command}
    shared = {k: v for k, v in file_values.items() if k not in command_names}
    resolved = _merge(resolved, shared)
    if isinstance(file_values.get(command), dict):
        resolved = _merge(resolved, file_values[command])
    resolved = _merge(resolved, {k: v for k, v in flags.items() if v is not None})
    resolved["command"] = command
    try:
        return RunConfig.model_validate(resolved)
    except ValidationError as exc:
        raise DomainError(f"invalid {command} configuration: {exc}") from exc
