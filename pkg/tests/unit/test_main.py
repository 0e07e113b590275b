"""Unit tests for the command-line entry point."""

from pathlib import Path

import pytest
import tomli_w

from src.config.defaults import Resolution, default_config_dict, default_run_config
from src.config.models import RunConfig
from src.errors import ConfigurationError
from src.main import EXIT_CONFIG, EXIT_OK, main, parse_args, resolve_workers


@pytest.fixture
def config() -> RunConfig:
    """Create a small beam configuration with two workers.

    Returns:
        Run configuration
    """
    config = default_run_config("beam", Resolution(points=16, tau_points=16, checkpoints=4))
    config.sweep.workers = 2
    return config


class TestParseArgs:
    """Tests for argument parsing."""

    def test_run_defaults(self) -> None:
        """Test the defaults of the run command."""
        args = parse_args(["run"])
        assert args.command == "run"
        assert args.config == "config.toml"
        assert args.out is None
        assert args.workers is None
        assert args.log_level == "WARNING"

    def test_flow_test_requires_preset(self) -> None:
        """Test that flow-test needs a preset."""
        with pytest.raises(SystemExit):
            parse_args(["flow-test"])

    def test_unknown_preset_rejected(self) -> None:
        """Test that presets are limited to the catalog."""
        with pytest.raises(SystemExit):
            parse_args(["check", "--preset", "tokamak"])

    def test_history_options(self) -> None:
        """Test parsing of the history command."""
        args = parse_args(["history", "--db", "sweeps.duckdb", "--show", "3"])
        assert args.db == "sweeps.duckdb"
        assert args.show == 3


class TestResolveWorkers:
    """Tests for worker count precedence."""

    def test_flag_wins(self, config: RunConfig, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test that --workers overrides the environment."""
        monkeypatch.setenv("TS_WORKERS", "8")
        assert resolve_workers(3, config) == 3

    def test_environment_over_config(
        self, config: RunConfig, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """Test that TS_WORKERS overrides the configuration."""
        monkeypatch.setenv("TS_WORKERS", "5")
        assert resolve_workers(None, config) == 5

    def test_config_fallback(self, config: RunConfig, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test that the configured count is used last."""
        monkeypatch.delenv("TS_WORKERS", raising=False)
        assert resolve_workers(None, config) == 2

    def test_invalid_environment(self, config: RunConfig, monkeypatch: pytest.MonkeyPatch) -> None:
        """Test that non-integer and non-positive values are refused."""
        monkeypatch.setenv("TS_WORKERS", "many")
        with pytest.raises(ConfigurationError, match="not an integer"):
            resolve_workers(None, config)
        monkeypatch.setenv("TS_WORKERS", "0")
        with pytest.raises(ConfigurationError, match="at least 1"):
            resolve_workers(None, config)

    def test_invalid_flag(self, config: RunConfig) -> None:
        """Test that --workers 0 is refused."""
        with pytest.raises(ConfigurationError):
            resolve_workers(0, config)


class TestMain:
    """Tests for command dispatch and exit codes."""

    def test_presets(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that the catalog lists every preset."""
        assert main(["presets"]) == EXIT_OK
        output = capsys.readouterr().out
        for name in ("beam", "gc4d", "flr4d"):
            assert name in output

    def test_missing_config(self, tmp_path: Path) -> None:
        """Test that a missing configuration file exits with 2."""
        assert main(["run", "--config", str(tmp_path / "absent.toml")]) == EXIT_CONFIG

    def test_invalid_eps(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Test that ε = 0 is a configuration error naming its key."""
        data = default_config_dict("beam", Resolution(points=16, tau_points=16, checkpoints=4))
        data["sweep"]["eps"] = [0.5, 0.0]
        path = tmp_path / "config.toml"
        path.write_text(tomli_w.dumps(data), encoding="utf-8")
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
        assert "sweep.eps" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_check_needs_target(self) -> None:
        """Test that check without --preset or --config exits with 2."""
        assert main(["check"]) == EXIT_CONFIG

    def test_history_missing_archive(self, tmp_path: Path) -> None:
        """Test that a missing archive exits with 2."""
        assert main(["history", "--db", str(tmp_path / "absent.duckdb")]) == EXIT_CONFIG

    def test_unwritable_output(
        self,
        tmp_path: Path,
        monkeypatch: pytest.MonkeyPatch,
        capsys: pytest.CaptureFixture[str],
    ) -> None:
        """Test that a report that cannot be written exits with 2."""
        data = default_config_dict("beam", Resolution(points=16, tau_points=16, checkpoints=4))
        path = tmp_path / "config.toml"
        path.write_text(tomli_w.dumps(data), encoding="utf-8")

        def refuse(report: object, target: Path) -> Path:
            raise PermissionError(f"read-only directory: {target.parent}")

        monkeypatch.setattr("src.execution.executor.run_sweep", lambda config, workers: object())
        monkeypatch.setattr("src.execution.report.write_report", refuse)
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
        assert "Cannot write output" in capsys.readouterr().err
