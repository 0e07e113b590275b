"""Convergence report domain model.

This module defines the value objects produced by an ε sweep: the status of
each reference run, one row per (ε, K) pair, the fitted convergence slope
per order and the report that collects them.
"""

from datetime import datetime
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class RunStatus(str, Enum):
    """Reference run status enumeration.

    Attributes:
        RUNNING: Reference solve in progress
        COMPLETED: Reference solve finished and errors were measured
        FAILED: Reference solve or error measurement raised
        TIMEOUT: Reference solve exceeded the timeout
    """

    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"
    TIMEOUT = "timeout"


class ReferenceRun(BaseModel):
    """One reference solve of a sweep.

    Attributes:
        eps: Scale parameter
        status: Run status
        started_at: Start timestamp
        completed_at: Completion timestamp (None while running)
        duration_seconds: Wall-clock duration (None while running)
        error_message: Failure description (None unless failed)
        norm_drift: Relative L² drift of the reference solution
        steps: Time steps taken
    """

    eps: float = Field(gt=0, lt=1)
    status: RunStatus = RunStatus.RUNNING
    started_at: datetime = Field(default_factory=datetime.now)
    completed_at: datetime | None = None
    duration_seconds: float | None = None
    error_message: str | None = None
    norm_drift: float | None = None
    steps: int | None = Field(default=None, ge=0)

    def calculate_duration(self) -> None:
        """Set duration_seconds from the timestamps once completed_at is set."""
        if self.completed_at is not None:
            self.duration_seconds = (self.completed_at - self.started_at).total_seconds()

    def mark_completed(self) -> None:
        """Mark the run as completed and calculate duration."""
        self.status = RunStatus.COMPLETED
        self.completed_at = datetime.now()
        self.calculate_duration()

    def mark_failed(self, message: str) -> None:
        """Mark the run as failed, keeping the error message."""
        self.status = RunStatus.FAILED
        self.error_message = message
        self.completed_at = datetime.now()
        self.calculate_duration()

    def mark_timeout(self) -> None:
        """Mark the run as timed out and calculate duration."""
        self.status = RunStatus.TIMEOUT
        self.completed_at = datetime.now()
        self.calculate_duration()


class SweepRow(BaseModel):
    """One CSV row: the error of the order-K expansion at one ε.

    Attributes:
        preset: Preset name
        order: Expansion order K
        eps: Scale parameter
        norm: Norm label ("1", "2" or "inf")
        error: e_K(ε), None when the reference run did not complete
        slope_fit: Fitted slope of e_K over ε, None when unreliable
        r_squared: Fit quality of the slope, None when no fit was possible
        w_closure_residual: Largest relative W_k closure residual, k ≤ K
        flow_residual: θ-closure residual of the fast flow
        norm_drift: Relative L² drift of the reference solution
        engine_seconds: Expansion build time, None unless timings are on
        reference_seconds: Reference solve time, None unless timings are on
        status: Status of the reference run behind the row
    """

    model_config = ConfigDict(populate_by_name=True)

    preset: str
    order: int = Field(alias="K", ge=0)
    eps: float = Field(gt=0, lt=1)
    norm: str
    error: float | None = None
    slope_fit: float | None = None
    r_squared: float | None = None
    w_closure_residual: float = 0.0
    flow_residual: float = 0.0
    norm_drift: float | None = None
    engine_seconds: float | None = None
    reference_seconds: float | None = None
    status: RunStatus = RunStatus.COMPLETED


class SlopeFit(BaseModel):
    """Least-squares fit of log e against log ε.

    Attributes:
        slope: Fitted slope (observed convergence order)
        intercept: Fitted intercept
        r_squared: Coefficient of determination
        points: Number of ε values used
        reliable: Whether R² ≥ 0.98 with at least 4 points
        dropped_largest: Whether the largest ε was excluded on a retry
    """

    slope: float
    intercept: float
    r_squared: float
    points: int = Field(ge=0)
    reliable: bool
    dropped_largest: bool = False


class ConvergenceReport(BaseModel):
    """Result of an ε sweep.

    Attributes:
        preset: Preset name
        order: Highest expansion order K
        norm: Norm label
        rows: One row per (ε, K') with K' ≤ K
        fits: Slope fit per order (absent when fewer than 2 errors exist)
        engine_seconds: Expansion build time
        flow_residual: θ-closure residual of the fast flow
        runs: Reference runs, one per ε
    """

    preset: str
    order: int = Field(ge=0)
    norm: str
    rows: list[SweepRow] = Field(default_factory=list)
    fits: dict[int, SlopeFit] = Field(default_factory=dict)
    engine_seconds: float | None = None
    flow_residual: float = 0.0
    runs: list[ReferenceRun] = Field(default_factory=list)

    def sorted_rows(self) -> list[SweepRow]:
        """Rows ordered by ε descending, then K ascending."""
        return sorted(self.rows, key=lambda row: (-row.eps, row.order))

    def errors(self, order: int) -> tuple[list[float], list[float]]:
        """Return (ε, e_K(ε)) of the completed rows of one order, ε descending."""
        eps: list[float] = []
        errors: list[float] = []
        for row in self.sorted_rows():
            if row.order == order and row.error is not None:
                eps.append(row.eps)
                errors.append(row.error)
        return eps, errors

    def row(self, eps: float, order: int) -> SweepRow:
        """Return the row of one (ε, K) pair.

        Raises:
            KeyError: If the pair is not in the report
        """
        for row in self.rows:
            if row.order == order and abs(row.eps - eps) <= 1e-15:
                return row
        raise KeyError(f"no row for eps={eps}, K={order}")

    def slope(self, order: int) -> float | None:
        """Reliable slope of one order, None otherwise."""
        fit = self.fits.get(order)
        if fit is None or not fit.reliable:
            return None
        return fit.slope

    @property
    def failed_count(self) -> int:
        """Number of reference runs that failed or timed out."""
        return sum(1 for run in self.runs if run.status in {RunStatus.FAILED, RunStatus.TIMEOUT})
