"""Invariant ledger domain model.

This module defines the pass/fail records produced by the invariant suite.
A failing check is data, not an exception.
"""

from pydantic import BaseModel, Field


class InvariantCheck(BaseModel):
    """Outcome of one invariant check.

    Attributes:
        name: Check identifier, e.g. "flow.closure"
        passed: Whether the check holds
        value: Measured residual (None when the check raised)
        tolerance: Acceptance threshold (None for boolean checks)
        detail: Human-readable context, e.g. the failing node
    """

    name: str = Field(min_length=1)
    passed: bool
    value: float | None = None
    tolerance: float | None = None
    detail: str = ""

    @classmethod
    def against(
        cls, name: str, value: float, tolerance: float, detail: str = ""
    ) -> "InvariantCheck":
        """Check that a residual stays within a tolerance."""
        return cls(
            name=name, passed=value <= tolerance, value=value, tolerance=tolerance, detail=detail
        )

    def summary(self) -> str:
        """One line with a ✓/❌ marker."""
        marker = "✓" if self.passed else "❌"
        text = f"{marker} {self.name}"
        if self.value is not None and self.tolerance is not None:
            text += f": {self.value:.3e} (tolerance {self.tolerance:.1e})"
        if self.detail:
            text += f" [{self.detail}]"
        return text


class InvariantLedger(BaseModel):
    """All checks run for one preset.

    Attributes:
        preset: Preset name
        checks: Checks in execution order
    """

    preset: str
    checks: list[InvariantCheck] = Field(default_factory=list)

    def add(self, check: InvariantCheck) -> InvariantCheck:
        """Append a check and return it."""
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        """Whether every check passed (an empty ledger passes)."""
        return all(check.passed for check in self.checks)

    def failures(self) -> list[InvariantCheck]:
        """Checks that did not pass."""
        return [check for check in self.checks if not check.passed]

    def get(self, name: str) -> InvariantCheck:
        """Return a check by name.

        Raises:
            KeyError: If no check has that name
        """
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(f"no check named {name}")
