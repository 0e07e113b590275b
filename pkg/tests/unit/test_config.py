"""Unit tests for configuration management.

Tests for configuration models, loader, and validation.
"""

from pathlib import Path
from typing import Any

import pytest
from pydantic import ValidationError

from src.config.defaults import (
    DEFAULT_EPS,
    RUN_RESOLUTION,
    Resolution,
    default_config_dict,
    default_run_config,
)
from src.config.loader import ConfigLoader, locate_key
from src.config.models import ExpansionSettings, RunConfig, SweepSettings
from src.errors import ConfigurationError

REPO_ROOT = Path(__file__).resolve().parents[2]


@pytest.fixture
def beam_dict() -> dict[str, Any]:
    """Create the shipped beam configuration as a dictionary.

    Returns:
        Configuration dictionary
    """
    return default_config_dict("beam", Resolution(points=16, tau_points=16, checkpoints=4))


class TestSweepSettings:
    """Tests for SweepSettings validation."""

    def test_defaults(self) -> None:
        """Test the default ε list and norm."""
        settings = SweepSettings()
        assert settings.eps == list(DEFAULT_EPS)
        assert settings.norm == "2"
        assert settings.workers == 1
        assert settings.timeout_seconds is None

    def test_integer_norm_accepted(self) -> None:
        """Test that norms may be given as integers."""
        assert SweepSettings(norm=1).norm == "1"  # type: ignore[arg-type]

    def test_unknown_norm_rejected(self) -> None:
        """Test that only 1, 2 and inf are accepted."""
        with pytest.raises(ValidationError):
            SweepSettings(norm="3")  # type: ignore[arg-type]

    def test_eps_must_decrease(self) -> None:
        """Test that ε values must be strictly decreasing."""
        with pytest.raises(ValidationError, match="strictly decreasing"):
            SweepSettings(eps=[0.1, 0.2])

    def test_eps_must_lie_in_unit_interval(self) -> None:
        """Test that ε = 0 is refused."""
        with pytest.raises(ValidationError, match=r"\(0, 1\)"):
            SweepSettings(eps=[0.5, 0.0])

    def test_empty_eps_rejected(self) -> None:
        """Test that at least one ε is required."""
        with pytest.raises(ValidationError, match="at least one"):
            SweepSettings(eps=[])


class TestExpansionSettings:
    """Tests for ExpansionSettings validation."""

    def test_order_alias(self) -> None:
        """Test that the order is read from the K key."""
        settings = ExpansionSettings.model_validate({"K": 3})
        assert settings.order == 3

    def test_order_above_four_rejected(self) -> None:
        """Test the supported order range."""
        with pytest.raises(ValidationError):
            ExpansionSettings.model_validate({"K": 5})

    def test_tau_points_lower_bound(self) -> None:
        """Test that fewer than 16 τ nodes are refused."""
        with pytest.raises(ValidationError):
            ExpansionSettings.model_validate({"tau_points": 8})


class TestRunConfig:
    """Tests for the root configuration."""

    def test_shipped_presets_validate(self) -> None:
        """Test that every shipped preset configuration is valid."""
        for preset in RUN_RESOLUTION:
            config = default_run_config(preset)
            assert config.problem.preset == preset
            assert len(config.problem.points) == config.dims

    def test_unknown_preset_has_no_defaults(self) -> None:
        """Test that default_config_dict refuses unknown presets."""
        with pytest.raises(KeyError):
            default_config_dict("tokamak")

    def test_dimension_mismatch(self, beam_dict: dict[str, Any]) -> None:
        """Test that the box must match the preset dimension."""
        beam_dict["problem"]["points"] = [16, 16, 16]
        with pytest.raises(ValidationError, match="needs 2 entries"):
            RunConfig.model_validate(beam_dict)

    def test_beam_rejects_lorentz_fields(self, beam_dict: dict[str, Any]) -> None:
        """Test that the beam preset takes fields.e only."""
        beam_dict["fields"]["b_z"] = [{"kind": "constant", "value": 1.0}]
        with pytest.raises(ValidationError, match="fields.e only"):
            RunConfig.model_validate(beam_dict)

    def test_parallel_velocity_refused(self) -> None:
        """Test that parallel advection is outside the 4D reduction."""
        data = default_config_dict("flr4d")
        data["problem"]["parallel_velocity"] = 0.5
        with pytest.raises(ValidationError, match="parallel"):
            RunConfig.model_validate(data)

    def test_field_line_only_for_guiding_center(self) -> None:
        """Test that fields.beta_z is accepted by gc4d and refused elsewhere."""
        strength = [{"kind": "constant", "value": 1.0}]
        data = default_config_dict("gc4d")
        data["fields"]["beta_z"] = strength
        assert len(RunConfig.model_validate(data).fields.beta_z) == 1
        data = default_config_dict("flr4d")
        data["fields"]["beta_z"] = strength
        with pytest.raises(ValidationError, match="beta_z only applies"):
            RunConfig.model_validate(data)

    def test_output_times_within_horizon(self, beam_dict: dict[str, Any]) -> None:
        """Test that output times must lie in (0, T]."""
        beam_dict["sweep"]["output_times"] = [0.5, 2.0]
        with pytest.raises(ValidationError, match="output_times"):
            RunConfig.model_validate(beam_dict)

    def test_output_times_default_to_horizon(self, beam_dict: dict[str, Any]) -> None:
        """Test that errors are measured at T by default."""
        config = RunConfig.model_validate(beam_dict)
        assert config.output_times == [1.0]


class TestConfigLoader:
    """Tests for ConfigLoader."""

    def test_load_shipped_config(self) -> None:
        """Test loading the repository's config.toml."""
        config = ConfigLoader.load(REPO_ROOT / "config.toml")
        assert config.problem.preset == "beam"
        assert config.problem.points == [128, 128]
        assert config.expansion.order == 1
        assert config.sweep.eps == list(DEFAULT_EPS)

    def test_load_missing_file(self, tmp_path: Path) -> None:
        """Test that a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError, match="not found"):
            ConfigLoader.load(tmp_path / "absent.toml")

    def test_malformed_toml_reports_line(self, tmp_path: Path) -> None:
        """Test that TOML syntax errors carry the line number."""
        path = tmp_path / "broken.toml"
        path.write_text('[problem]\npreset beam\n', encoding="utf-8")
        with pytest.raises(ConfigurationError) as info:
            ConfigLoader.load(path)
        assert info.value.line == 2

    def test_invalid_value_reports_key_and_line(self, tmp_path: Path) -> None:
        """Test that validation errors name the key and its line."""
        path = tmp_path / "config.toml"
        ConfigLoader.save(default_run_config("beam"), path)
        text = path.read_text(encoding="utf-8")
        path.write_text(text.replace('norm = "2"', 'norm = "7"'), encoding="utf-8")
        with pytest.raises(ConfigurationError) as info:
            ConfigLoader.load(path)
        assert info.value.key == "sweep.norm"
        assert info.value.line == locate_key(text, "sweep.norm")
        assert info.value.line is not None

    def test_unknown_key_rejected(self, beam_dict: dict[str, Any]) -> None:
        """Test that misspelled keys never fall back to defaults."""
        beam_dict["sweep"]["epsilon"] = [0.1]
        with pytest.raises(ConfigurationError) as info:
            ConfigLoader.validate_dict(beam_dict)
        assert info.value.key == "sweep.epsilon"

    def test_order_error_uses_file_key(self, beam_dict: dict[str, Any]) -> None:
        """Test that alias keys are reported as written in the file."""
        beam_dict["expansion"]["K"] = 9
        with pytest.raises(ConfigurationError) as info:
            ConfigLoader.validate_dict(beam_dict)
        assert info.value.key == "expansion.K"

    def test_save_and_reload(self, tmp_path: Path, beam_dict: dict[str, Any]) -> None:
        """Test that a saved configuration loads back unchanged."""
        config = ConfigLoader.validate_dict(beam_dict)
        path = tmp_path / "resolved.toml"
        ConfigLoader.save(config, path)
        assert ConfigLoader.load(path) == config


class TestLocateKey:
    """Tests for key-to-line lookup in TOML text."""

    TEXT = '[problem]\npreset = "beam"\n\n[sweep]\neps = [0.1, 0.05]\n'

    def test_key_line(self) -> None:
        """Test locating a key inside its section."""
        assert locate_key(self.TEXT, "sweep.eps") == 5

    def test_section_line(self) -> None:
        """Test locating a section header."""
        assert locate_key(self.TEXT, "sweep") == 4

    def test_missing_key_falls_back_to_section(self) -> None:
        """Test that absent keys point at their section."""
        assert locate_key(self.TEXT, "sweep.norm") == 4

    def test_missing_section(self) -> None:
        """Test that absent sections give None."""
        assert locate_key(self.TEXT, "output.directory") is None
