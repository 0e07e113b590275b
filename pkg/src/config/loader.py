"""TOML configuration file loader with validation.

This module provides functionality to load and save run configurations
from/to TOML files with Pydantic validation. Validation failures are
reported as ConfigurationError naming the offending key and, when it can
be found in the file, its line number.
"""

import re
import tomllib
from pathlib import Path
from typing import Any, NoReturn

from pydantic import ValidationError

from src.config.models import RunConfig
from src.errors import ConfigurationError

_TOML_LINE = re.compile(r"at line (\d+)")
_SECTION = re.compile(r"^\s*\[([^\[\]]+)\]\s*(#.*)?$")


def _dotted_key(location: tuple[int | str, ...]) -> str:
    key = ""
    for part in location:
        if isinstance(part, int):
            key += f"[{part}]"
        else:
            key += f".{part}" if key else part
    return key


def locate_key(text: str, key: str) -> int | None:
    """Find the line of a dotted key such as ``sweep.eps`` in TOML text.

    Args:
        text: Raw TOML document
        key: Dotted key; list indices and nested parts are ignored

    Returns:
        1-based line number, or None if the key cannot be found
    """
    parts = [p for p in re.split(r"[.\[\]]", key) if p and not p.isdigit()]
    if not parts:
        return None
    section, name = parts[0], parts[1] if len(parts) > 1 else None
    current: str | None = None
    section_line: int | None = None
    for number, line in enumerate(text.splitlines(), start=1):
        header = _SECTION.match(line)
        if header:
            current = header.group(1).strip()
            if current == section and name is None:
                return number
            if current == section:
                section_line = number
            continue
        if current == section and name is not None:
            if re.match(rf"^\s*{re.escape(name)}\s*=", line):
                return number
    return section_line


def _raise_validation(error: ValidationError, text: str | None) -> NoReturn:
    first = error.errors()[0]
    key = _dotted_key(tuple(first["loc"]))
    message = first["msg"]
    if not key:
        raise ConfigurationError(f"Invalid configuration: {message}") from error
    line = locate_key(text, key) if text is not None else None
    raise ConfigurationError(message, key=key, line=line) from error


class ConfigLoader:
    """Loader for TOML run configurations with validation."""

    @staticmethod
    def load(config_path: str | Path) -> RunConfig:
        """Load and validate a run configuration from a TOML file.

        Args:
            config_path: Path to the TOML configuration file

        Returns:
            Validated run configuration

        Raises:
            FileNotFoundError: If the configuration file does not exist
            ConfigurationError: If the file is malformed or the configuration is invalid
        """
        config_path = Path(config_path)

        if not config_path.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        text = config_path.read_text(encoding="utf-8")
        try:
            config_dict = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            match = _TOML_LINE.search(str(e))
            line = int(match.group(1)) if match else None
            raise ConfigurationError(f"malformed TOML: {e}", line=line) from e

        return ConfigLoader._validate(config_dict, text)

    @staticmethod
    def save(config: RunConfig, config_path: str | Path) -> None:
        """Save a run configuration to a TOML file.

        Args:
            config: Run configuration to save
            config_path: Path to the TOML configuration file

        Raises:
            OSError: If the file cannot be written
        """
        import tomli_w

        config_path = Path(config_path)
        config_dict = config.model_dump(mode="json", by_alias=True, exclude_none=True)

        with config_path.open("wb") as f:
            tomli_w.dump(config_dict, f)

    @staticmethod
    def validate_dict(config_dict: dict[str, Any]) -> RunConfig:
        """Validate a configuration dictionary without loading from file.

        Args:
            config_dict: Configuration dictionary to validate

        Returns:
            Validated run configuration

        Raises:
            ConfigurationError: If the configuration is invalid
        """
        return ConfigLoader._validate(config_dict, None)

    @staticmethod
    def _validate(config_dict: dict[str, Any], text: str | None) -> RunConfig:
        try:
            return RunConfig.model_validate(config_dict)
        except ValidationError as e:
            _raise_validation(e, text)
