"""Unit tests for sweep execution helpers.

Tests for slope fitting, progress tracking, timeouts and CSV reports.
"""

import asyncio
from pathlib import Path

import pytest

from src.execution.fitting import fit_slope
from src.execution.report import CSV_HEADER, read_report, write_report
from src.execution.state import SweepState
from src.execution.timeout import with_timeout
from src.models.report import ConvergenceReport, RunStatus, SweepRow

EPS = [1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128]


@pytest.fixture
def report() -> ConvergenceReport:
    """Create a two-order report with one missing error.

    Returns:
        Convergence report
    """
    rows = []
    for eps in EPS[:3]:
        for k in range(2):
            rows.append(
                SweepRow(
                    preset="beam",
                    order=k,
                    eps=eps,
                    norm="2",
                    error=0.3 * eps ** (k + 1),
                    w_closure_residual=1e-14,
                    flow_residual=0.0,
                    norm_drift=2e-6,
                )
            )
    rows.append(SweepRow(preset="beam", order=0, eps=EPS[3], norm="2", status=RunStatus.FAILED))
    rows.append(SweepRow(preset="beam", order=1, eps=EPS[3], norm="2", status=RunStatus.FAILED))
    return ConvergenceReport(preset="beam", order=1, norm="2", rows=rows)


class TestFitSlope:
    """Tests for log-log slope fitting."""

    def test_exact_power_law(self) -> None:
        """Test that e = 3ε² gives slope 2 with R² = 1."""
        fit = fit_slope(EPS[:4], [3.0 * eps**2 for eps in EPS[:4]])
        assert fit is not None
        assert fit.slope == pytest.approx(2.0)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.points == 4
        assert fit.reliable
        assert not fit.dropped_largest

    def test_three_points_are_unreliable(self) -> None:
        """Test that fewer than four points never give a reliable slope."""
        fit = fit_slope(EPS[:3], [eps for eps in EPS[:3]])
        assert fit is not None
        assert fit.slope == pytest.approx(1.0)
        assert not fit.reliable

    def test_outlier_at_largest_eps_is_dropped(self) -> None:
        """Test the single retry without the largest ε."""
        errors = [eps**2 for eps in EPS]
        errors[0] *= 100.0
        fit = fit_slope(EPS, errors)
        assert fit is not None
        assert fit.dropped_largest
        assert fit.points == 4
        assert fit.slope == pytest.approx(2.0)
        assert fit.reliable

    def test_unsorted_input(self) -> None:
        """Test that the order of the ε values does not matter."""
        fit = fit_slope(list(reversed(EPS)), [eps**3 for eps in reversed(EPS)])
        assert fit is not None
        assert fit.slope == pytest.approx(3.0)

    def test_too_few_usable_points(self) -> None:
        """Test that zero and non-finite errors are skipped."""
        assert fit_slope([0.5, 0.25, 0.125], [1e-2, 0.0, float("nan")]) is None
        assert fit_slope([], []) is None

    def test_length_mismatch(self) -> None:
        """Test that ε and error lists must have equal length."""
        with pytest.raises(ValueError, match="2 eps values but 1 errors"):
            fit_slope([0.5, 0.25], [1e-2])


class TestSweepState:
    """Tests for SweepState."""

    def test_tracks_statuses(self) -> None:
        """Test adding and finishing runs."""
        state = SweepState(preset="beam")
        state.add_run(0.125)
        state.add_run(0.0625)
        assert state.get_status(0.125) == RunStatus.RUNNING
        assert not state.all_completed()

        state.update_status(0.125, RunStatus.COMPLETED)
        state.update_status(0.0625, RunStatus.TIMEOUT)
        assert state.all_completed()
        assert state.get_completed_count() == 1
        assert state.get_failed_count() == 1

    def test_unknown_run(self) -> None:
        """Test that unregistered ε values raise KeyError."""
        state = SweepState(preset="beam")
        with pytest.raises(KeyError):
            state.update_status(0.5, RunStatus.COMPLETED)
        with pytest.raises(KeyError):
            state.get_status(0.5)


class TestWithTimeout:
    """Tests for the timeout wrapper."""

    def test_result_within_limit(self) -> None:
        """Test that a fast coroutine returns its value."""
        assert asyncio.run(with_timeout(asyncio.sleep(0.0, result=7), 5.0)) == 7

    def test_no_limit(self) -> None:
        """Test that None disables the limit."""
        assert asyncio.run(with_timeout(asyncio.sleep(0.0, result="done"), None)) == "done"

    def test_limit_reached(self) -> None:
        """Test that a slow coroutine gives None."""
        assert asyncio.run(with_timeout(asyncio.sleep(5.0, result=7), 0.01)) is None


class TestCsvReport:
    """Tests for CSV emission and parse-back."""

    def test_empty_report_is_header_only(self, tmp_path: Path) -> None:
        """Test the file written for a report without rows."""
        path = write_report(ConvergenceReport(preset="beam", order=0, norm="2"), tmp_path / "r.csv")
        assert path.read_text(encoding="utf-8") == ",".join(CSV_HEADER) + "\n"

    def test_rows_are_sorted(self, tmp_path: Path, report: ConvergenceReport) -> None:
        """Test that rows are written ε descending, then K ascending."""
        lines = write_report(report, tmp_path / "r.csv").read_text(encoding="utf-8").splitlines()
        assert lines[1].startswith("beam,0,0.125,2,")
        assert lines[2].startswith("beam,1,0.125,2,")
        assert lines[-1].startswith("beam,1,0.015625,2,,")

    def test_identical_reports_give_identical_bytes(
        self, tmp_path: Path, report: ConvergenceReport
    ) -> None:
        """Test that the CSV is deterministic."""
        first = write_report(report, tmp_path / "a.csv").read_bytes()
        second = write_report(report.model_copy(deep=True), tmp_path / "b.csv").read_bytes()
        assert first == second

    def test_round_trip(self, tmp_path: Path, report: ConvergenceReport) -> None:
        """Test that parsed rows equal the written ones."""
        parsed = read_report(write_report(report, tmp_path / "nested" / "r.csv"))
        assert parsed.preset == "beam"
        assert parsed.order == 1
        assert parsed.sorted_rows() == report.sorted_rows()

    def test_missing_error_reads_as_failed(
        self, tmp_path: Path, report: ConvergenceReport
    ) -> None:
        """Test that empty error fields mark the row as failed."""
        parsed = read_report(write_report(report, tmp_path / "r.csv"))
        assert parsed.row(EPS[3], 0).status == RunStatus.FAILED
        assert parsed.row(EPS[0], 0).status == RunStatus.COMPLETED

    def test_unexpected_header(self, tmp_path: Path) -> None:
        """Test that foreign CSV files are refused."""
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="unexpected header"):
            read_report(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        """Test that a missing report raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            read_report(tmp_path / "absent.csv")
