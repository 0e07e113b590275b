"""Integration tests for the invariant suite."""

import pytest

from src.config.defaults import Resolution, default_config_dict
from src.config.models import RunConfig
from src.errors import ConfigurationError
from src.execution.invariants import divergence_check, run_invariant_suite, run_invariants
from src.models.invariants import InvariantLedger
from src.presets.registry import default_limit_model


@pytest.fixture(scope="module")
def beam_ledger() -> InvariantLedger:
    """Run the invariant suite on the beam preset at its check resolution.

    Returns:
        Invariant ledger
    """
    return run_invariants("beam")


@pytest.mark.integration
class TestInvariantSuite:
    """Tests for run_invariants and run_invariant_suite."""

    def test_beam_passes(self, beam_ledger: InvariantLedger) -> None:
        """Test that every beam invariant holds."""
        assert beam_ledger.passed, [check.summary() for check in beam_ledger.failures()]

    def test_beam_ledger_contents(self, beam_ledger: InvariantLedger) -> None:
        """Test that the expected checks are recorded."""
        names = {check.name for check in beam_ledger.checks}
        for name in (
            "expansion.divergence",
            "flow.closure",
            "flow.agreement",
            "operators.equivalence",
            "engine.build",
            "corrector.closure",
            "beam.symmetry",
            "corrector.crosscheck",
            "reference.norm_drift",
        ):
            assert name in names
        assert "flr.period_matrices" not in names

    def test_unknown_preset(self) -> None:
        """Test that unknown presets raise ConfigurationError."""
        with pytest.raises(ConfigurationError, match="unknown preset"):
            run_invariants("tokamak")

    def test_failures_are_recorded(self) -> None:
        """Test that a failing build becomes a ledger entry."""
        data = default_config_dict("beam", Resolution(points=16, tau_points=16, checkpoints=4))
        data["expansion"]["max_memory_mb"] = 1e-6
        ledger = run_invariant_suite(RunConfig.model_validate(data))
        assert not ledger.passed
        build = ledger.get("engine.build")
        assert not build.passed
        assert "ConfigurationError" in build.detail

    def test_divergence_check_names_location(self) -> None:
        """Test the detail of the divergence entry."""
        model = default_limit_model("gc4d", Resolution(points=8, tau_points=16, checkpoints=2))
        check = divergence_check(model.problem.expansion, model.problem.grid)
        assert check.name == "expansion.divergence"
        assert check.passed
        assert "x=(" in check.detail
