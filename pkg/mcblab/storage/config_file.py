"""
Experiment Config Files

Line-oriented `key = value` files with `[run]`, `[initial]`, `[suite]` and
`[output]` sections, validated into an ExperimentConfig.
"""

import configparser
import logging
from pathlib import Path
from typing import Any, Mapping

from pydantic import ValidationError

from ..errors import ConfigError
from ..schemas.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

SECTIONS = tuple(ExperimentConfig.model_fields)


def _field_path(loc: tuple) -> str:
    return ".".join(str(part) for part in loc)


def config_from_mapping(data: Mapping[str, Mapping[str, Any]]) -> ExperimentConfig:
    """Validate nested section -> key -> value data; errors carry the dotted field path."""
    unknown = [name for name in data if name not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section(s) {unknown}", field_path=unknown[0])
    for section, values in data.items():
        allowed = ExperimentConfig.model_fields[section].annotation.model_fields
        extra = [key for key in values if key not in allowed]
        if extra:
            raise ConfigError("unknown key", field_path=f"{section}.{extra[0]}")
    try:
        return ExperimentConfig.model_validate({k: dict(v) for k, v in data.items()})
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(first["msg"], field_path=_field_path(first["loc"])) from exc


def parse_config_text(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    data = {section: dict(parser.items(section)) for section in parser.sections()}
    return config_from_mapping(data)


def load_config(path: Path) -> ExperimentConfig:
    """Read and validate an experiment config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    config = parse_config_text(text)
    logger.info("loaded %s (config hash %s)", path, config.config_hash())
    return config


def merge_overrides(
    config: ExperimentConfig, overrides: Mapping[str, Mapping[str, Any]]
) -> ExperimentConfig:
    """Apply command-line overrides on top of a config and revalidate."""
    data = config.model_dump(mode="json", exclude_none=True)
    for section, values in overrides.items():
        for key, value in values.items():
            if value is not None:
                data.setdefault(section, {})[key] = value
    return config_from_mapping(data)
