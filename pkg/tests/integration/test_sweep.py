"""Integration tests for convergence sweeps with concurrent reference runs."""

import math
from dataclasses import replace

import numpy as np
import pytest
from pydantic import ValidationError

from src.config.defaults import Resolution, default_run_config
from src.config.models import ReferenceSettings, RunConfig
from src.errors import ConfigurationError, InputError
from src.execution.executor import build_engine, completed, run_sweep
from src.models.report import ConvergenceReport, RunStatus
from src.numerics.characteristics import RemapMode
from src.numerics.norms import norm, norm_values
from src.reference.problem import StiffProblem
from src.reference.solver import solve_direct

EPS = [1 / 8, 1 / 16, 1 / 32]


def small_config() -> RunConfig:
    """Create a coarse first-order beam sweep over three ε values."""
    config = default_run_config("beam", Resolution(points=24, tau_points=16, checkpoints=4))
    config.sweep.eps = list(EPS)
    config.reference.n_fast = 32
    return config


@pytest.fixture(scope="module")
def report() -> ConvergenceReport:
    """Run the coarse sweep with two workers.

    Returns:
        Convergence report
    """
    return run_sweep(small_config(), workers=2)


@pytest.mark.integration
class TestRunSweep:
    """Tests for run_sweep."""

    def test_every_run_completes(self, report: ConvergenceReport) -> None:
        """Test that all reference runs complete."""
        assert completed(report)
        assert report.failed_count == 0
        assert len(report.rows) == len(EPS) * 2

    def test_leading_error_decreases(self, report: ConvergenceReport) -> None:
        """Test that e_0 shrinks with ε."""
        eps, errors = report.errors(0)
        assert eps == EPS
        assert errors[0] > errors[1] > errors[2] > 0.0

    def test_rows_carry_diagnostics(self, report: ConvergenceReport) -> None:
        """Test the residual columns of every row."""
        for row in report.rows:
            assert row.status == RunStatus.COMPLETED
            assert row.error is not None and math.isfinite(row.error)
            assert row.flow_residual == 0.0
            assert row.w_closure_residual < 1e-10
            assert row.engine_seconds is None
            assert row.norm_drift is not None

    def test_fits_are_attached(self, report: ConvergenceReport) -> None:
        """Test that slope fits exist but three points are never reliable."""
        for k in range(2):
            fit = report.fits[k]
            assert fit.points == 3
            assert not fit.reliable
            assert report.slope(k) is None
            assert all(row.r_squared == fit.r_squared for row in report.rows if row.order == k)

    def test_timeout_marks_runs(self) -> None:
        """Test that runs over the time limit are recorded, not raised."""
        config = small_config()
        config.sweep.timeout_seconds = 1e-4
        timed_out = run_sweep(config, workers=3)
        assert timed_out.failed_count == len(EPS)
        assert all(run.status == RunStatus.TIMEOUT for run in timed_out.runs)
        assert all(row.error is None for row in timed_out.rows)
        assert timed_out.fits == {}

    def test_engine_refuses_memory_overrun(self) -> None:
        """Test that the engine build checks its memory estimate first."""
        config = small_config()
        config.expansion.max_memory_mb = 1e-6
        with pytest.raises(ConfigurationError, match="max_memory_mb"):
            build_engine(config)


@pytest.mark.integration
class TestReferenceSolver:
    """Tests for the direct solver on the coarse beam problem."""

    def test_output_times(self) -> None:
        """Test solutions at several output times."""
        config = small_config()
        build = build_engine(config)
        problem = StiffProblem.from_problem(build.model.problem, 1 / 8, config.reference)
        solution = solve_direct(problem, [0.5, 1.0])
        assert solution.times == (0.5, 1.0)
        assert solution.norm_drift < 0.05
        assert solution.steps == problem.total_steps
        with pytest.raises(KeyError):
            solution.at(0.75)
        assert solution.at(0.5) is solution.fields[0]

    def test_remap_modes_agree(self) -> None:
        """Test that remapping every step stays close to remapping from u⁰ once."""
        config = small_config()
        config.problem.points = [48, 48]
        build = build_engine(config)
        problem = StiffProblem.from_problem(build.model.problem, 1 / 4, config.reference)
        once = solve_direct(problem)
        stepped = solve_direct(replace(problem, remap=RemapMode.STEP))
        gap = norm_values(problem.grid, stepped.at(1.0).flat - once.at(1.0).flat)
        assert gap < 0.05 * norm(once.at(1.0))

        initial = norm(problem.initial)
        for solution, bound in ((once, 0.01), (stepped, 0.02)):
            endpoint = abs(norm(solution.at(1.0)) - initial) / initial
            assert endpoint <= solution.norm_drift < bound

    def test_drift_samples_must_be_positive(self) -> None:
        """Test that at least one drift sample time is required."""
        with pytest.raises(ValidationError):
            ReferenceSettings(drift_samples=0)
        config = small_config()
        model = build_engine(config).model
        problem = StiffProblem.from_problem(model.problem, 1 / 8, config.reference)
        with pytest.raises(InputError, match="drift_samples"):
            replace(problem, drift_samples=0)


@pytest.mark.integration
class TestFieldFreeBeam:
    """Tests for the beam without electric field, where u_ε = u⁰∘X(−t/ε)."""

    def test_leading_order_is_exact(self) -> None:
        """Test that e_0 stays at discretization level for every ε."""
        config = small_config()
        config.fields.e = []
        config.problem.points = [48, 48]
        config.expansion.order = 0
        report = run_sweep(config)
        _, errors = report.errors(0)
        assert len(errors) == len(EPS)
        assert max(errors) < 1e-2


def _fitted_slope(eps: list[float], errors: list[float]) -> float:
    """Least-squares slope of log e against log ε."""
    return float(np.polyfit(np.log(eps), np.log(errors), 1)[0])


@pytest.mark.integration
@pytest.mark.slow
class TestConvergenceSlopes:
    """Tests for the fitted error slopes of a four-point beam sweep."""

    SLOPE_EPS = [1 / 4, 1 / 8, 1 / 16, 1 / 32]

    @pytest.fixture(scope="class")
    def slope_report(self) -> ConvergenceReport:
        """Run the first-order beam sweep on a 64² grid.

        Returns:
            Convergence report
        """
        config = default_run_config("beam", Resolution(points=64, tau_points=32, checkpoints=16))
        config.expansion.transport_substeps = 4
        config.sweep.eps = list(self.SLOPE_EPS)
        config.reference.n_fast = 64
        return run_sweep(config, workers=2)

    def test_leading_order_slope(self, slope_report: ConvergenceReport) -> None:
        """Test that e_0 falls like ε."""
        eps, errors = slope_report.errors(0)
        assert eps == self.SLOPE_EPS
        assert 0.8 <= _fitted_slope(eps, errors) <= 1.2

    def test_first_order_slope(self, slope_report: ConvergenceReport) -> None:
        """Test that e_1 falls like ε² and stays below e_0."""
        eps, errors = slope_report.errors(1)
        assert eps == self.SLOPE_EPS
        assert 1.7 <= _fitted_slope(eps, errors) <= 2.3
        _, leading = slope_report.errors(0)
        assert all(e1 < e0 for e1, e0 in zip(errors, leading, strict=True))
