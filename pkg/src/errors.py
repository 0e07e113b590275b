"""Exception hierarchy for the two-scale expansion toolkit.

This module defines the error types raised by the numerics, flow, engine,
reference and harness layers. Input and configuration problems derive from
ValueError, numerical breakdowns from RuntimeError, so callers that only know
the builtin types keep working.
"""


class TwoScaleError(Exception):
    """Base class for every error raised by this package."""


class InputError(TwoScaleError, ValueError):
    """Raised when an operation receives malformed numerical input."""


class ConfigurationError(TwoScaleError, ValueError):
    """Raised when a configuration is invalid or cannot be honoured.

    Attributes:
        key: Dotted configuration key at fault, if known
        line: 1-based line number in the source file, if known
    """

    def __init__(self, message: str, key: str | None = None, line: int | None = None) -> None:
        self.key = key
        self.line = line
        location = ""
        if key is not None:
            location = f"{key}: "
        if line is not None:
            location = f"line {line}: {location}"
        super().__init__(f"{location}{message}")


class DivergenceError(TwoScaleError, RuntimeError):
    """Raised when non-finite values appear during time stepping.

    Attributes:
        step: Index of the step at which the state stopped being finite
    """

    def __init__(self, message: str, step: int | None = None) -> None:
        self.step = step
        suffix = f" (step {step})" if step is not None else ""
        super().__init__(f"{message}{suffix}")


class SequencingError(TwoScaleError, RuntimeError):
    """Raised when an order of the recursion is requested before its inputs exist."""


class DegenerateFlowError(TwoScaleError, RuntimeError):
    """Raised when the flow Jacobian is too far from volume preserving to be inverted.

    Attributes:
        location: Phase-space point where the determinant check failed
        determinant: Determinant found there
    """

    def __init__(
        self, message: str, location: tuple[float, ...] | None = None, determinant: float = 0.0
    ) -> None:
        self.location = location
        self.determinant = determinant
        super().__init__(message)
