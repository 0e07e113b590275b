"""Progress tracking for the reference runs of a sweep."""

from dataclasses import dataclass, field

from src.models.report import RunStatus

_TERMINAL = {RunStatus.COMPLETED, RunStatus.FAILED, RunStatus.TIMEOUT}


@dataclass
class SweepState:
    """Status of every ε run of one sweep.

    Attributes:
        preset: Preset being swept
        runs: Status per ε
    """

    preset: str
    runs: dict[float, RunStatus] = field(default_factory=dict)

    def add_run(self, eps: float) -> None:
        """Register an ε run as running."""
        self.runs[eps] = RunStatus.RUNNING

    def update_status(self, eps: float, status: RunStatus) -> None:
        """Update the status of an ε run.

        Raises:
            KeyError: If the run was never added
        """
        if eps not in self.runs:
            raise KeyError(f"Unknown run: eps={eps}")
        self.runs[eps] = status

    def get_status(self, eps: float) -> RunStatus:
        """Return the status of an ε run.

        Raises:
            KeyError: If the run was never added
        """
        if eps not in self.runs:
            raise KeyError(f"Unknown run: eps={eps}")
        return self.runs[eps]

    def all_completed(self) -> bool:
        """Whether every run reached a terminal state."""
        return all(status in _TERMINAL for status in self.runs.values())

    def get_completed_count(self) -> int:
        return sum(1 for status in self.runs.values() if status == RunStatus.COMPLETED)

    def get_failed_count(self) -> int:
        """Number of runs that failed or timed out."""
        return sum(
            1 for status in self.runs.values() if status in {RunStatus.FAILED, RunStatus.TIMEOUT}
        )
