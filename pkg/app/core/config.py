"""
Configuration management for reeb-strip.
"""

import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

import yaml
from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.errors import SpecError
from app.models.schemas import AnalysisSpec
from app.observability.logging import get_logger

logger = get_logger(__name__)


class Settings(BaseSettings):
    """Runtime settings loaded from environment and config files."""

    model_config = SettingsConfigDict(env_prefix="REEB_", env_file=".env", case_sensitive=False, extra="ignore")

    # Output
    output_dir: str = "reeb-out"

    # Logging
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "WARNING"
    log_format: Literal["json", "text"] = "json"
    log_file: Optional[str] = None

    # Observability
    enable_metrics: bool = False

    # Oracle
    oracle_samples: int = Field(default=100_000, ge=10_000)
    oracle_levels: int = Field(default=64, ge=1)

    # Config file path
    config_file: Optional[str] = None


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings."""
    return Settings()


def load_config_from_file(config_path: str) -> Dict[str, Any]:
    """
    Load configuration from YAML file.

    Args:
        config_path: Path to config file

    Returns:
        Configuration dictionary; empty when the file is missing or unreadable
    """
    if not os.path.exists(config_path):
        return {}

    try:
        with open(config_path, 'r') as f:
            data = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        logger.warning(
            "Failed to load config file",
            extra={"event": "config_file_ignored", "path": config_path, "error": str(e)},
        )
        return {}
    if not isinstance(data, dict):
        logger.warning(
            "Config file is not a mapping",
            extra={"event": "config_file_ignored", "path": config_path},
        )
        return {}
    return data


def get_config_file_paths(config_file: Optional[str] = None) -> list[str]:
    """Get list of potential config file paths in order of preference."""
    return [
        config_file or "",
        os.environ.get("REEB_CONFIG_FILE", ""),
        os.path.expanduser("~/.config/reeb-strip/config.yaml"),
        "./reeb-strip.yaml",
    ]


def load_merged_config(config_file: Optional[str] = None, **overrides: Any) -> Settings:
    """
    Load configuration from multiple sources with precedence:
    1. CLI flags (`overrides`, None values ignored)
    2. Environment variables
    3. Configuration file (first existing path)
    4. Defaults
    """
    file_config: Dict[str, Any] = {}
    for config_path in get_config_file_paths(config_file):
        if config_path and os.path.exists(config_path):
            file_config = load_config_from_file(config_path)
            break

    env_set = {
        name for name in Settings.model_fields
        if f"REEB_{name.upper()}" in os.environ
    }
    values = {k: v for k, v in file_config.items() if k in Settings.model_fields and k not in env_set}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Settings(**values)


def load_spec(path: Union[str, Path]) -> AnalysisSpec:
    """
    Load and validate an analysis spec file.

    Raises:
        SpecError: If the file is missing, is not YAML, or fails validation.
    """
    path = Path(path)
    if not path.is_file():
        raise SpecError(f"spec file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise SpecError(f"spec file {path} is not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise SpecError(f"spec file {path} must contain a mapping")
    return parse_spec(data, source=str(path))


def parse_spec(data: Dict[str, Any], source: str = "<spec>") -> AnalysisSpec:
    try:
        return AnalysisSpec.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'spec'}: {err['msg']}" for err in e.errors()
        )
        raise SpecError(f"invalid spec {source}: {problems}") from e
