"""Direct ε-resolving solver, the ground truth of the convergence studies.

Characteristics of the combined field A_ε + (1/ε) L are traced backwards
with classical Runge–Kutta steps of length εθ/n_fast. With the default
"initial" remap every node is traced back to t = 0 and the initial data is
evaluated at its foot once; "step" remap interpolates the previous level
after every step.
"""

import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.errors import ConfigurationError, InputError
from src.numerics.characteristics import RemapMode, Source, StepMethod, transport
from src.numerics.grid import FloatArray, ScalarField
from src.numerics.norms import norm_values
from src.reference.problem import StiffProblem

logger = logging.getLogger(__name__)

_WORK_ARRAYS_PER_DIM = 12
_BYTES_PER_MB = 1024.0 * 1024.0


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    """Reference solution at the requested output times.

    Attributes:
        eps: Scale parameter of the run
        times: Output times
        fields: u_ε at every output time
        norm_drift: Largest relative change of the L² norm over [0, T]: every
            step with step remapping, the output and drift sample times otherwise
        steps: Time steps taken for the last output time
        seconds: Wall-clock duration
    """

    eps: float
    times: tuple[float, ...]
    fields: tuple[ScalarField, ...]
    norm_drift: float
    steps: int
    seconds: float

    def at(self, t: float) -> ScalarField:
        """Return the solution at an output time.

        Raises:
            KeyError: If t is not an output time
        """
        for time_, field_ in zip(self.times, self.fields, strict=True):
            if abs(time_ - t) <= 1e-12 * max(1.0, abs(t)):
                return field_
        raise KeyError(f"no reference output at t={t}")


def estimate_memory_mb(problem: StiffProblem, outputs: int) -> float:
    """Estimate the working set of a direct solve in megabytes."""
    nodes = problem.grid.size
    arrays = _WORK_ARRAYS_PER_DIM * problem.grid.dims + outputs + 2
    return 8.0 * arrays * nodes / _BYTES_PER_MB


def _resolve_times(problem: StiffProblem, output_times: Sequence[float] | None) -> list[float]:
    times = sorted(float(t) for t in (output_times or [problem.horizon]))
    if any(t <= 0.0 or t > problem.horizon * (1.0 + 1e-12) for t in times):
        raise InputError("output times must lie in (0, T]")
    return times


def _drift_times(problem: StiffProblem, times: list[float]) -> list[float]:
    if problem.remap is not RemapMode.INITIAL:
        return times
    samples = np.linspace(0.0, problem.horizon, problem.drift_samples + 1)[1:]
    return sorted(set(times) | {float(t) for t in samples})


def _solve(
    problem: StiffProblem, source: Source | None, output_times: Sequence[float] | None
) -> ReferenceSolution:
    times = _resolve_times(problem, output_times)
    estimate = estimate_memory_mb(problem, len(times))
    if estimate > problem.max_memory_mb:
        raise ConfigurationError(
            f"reference solve needs about {estimate:.0f} MB, above the limit of "
            f"{problem.max_memory_mb:.0f} MB",
            key="reference.max_memory_mb",
        )
    logger.info(
        "Reference solve eps=%g: δt=%.3e, %d steps, remap=%s",
        problem.eps,
        problem.time_step,
        problem.total_steps,
        problem.remap.value,
    )
    initial_norm = norm_values(problem.grid, problem.initial.flat)
    drift = 0.0

    def observe(t: float, values: FloatArray) -> None:
        nonlocal drift
        if initial_norm > 0.0:
            change = abs(norm_values(problem.grid, values) - initial_norm) / initial_norm
            drift = max(drift, change)

    started = time.perf_counter()
    levels = _drift_times(problem, times)
    values = transport(
        problem.grid,
        problem.velocity(),
        problem.initial.flat,
        levels,
        problem.time_step,
        source=source,
        method=StepMethod.RK4,
        remap=problem.remap,
        initial_exact=problem.initial_exact,
        on_step=observe,
    )
    seconds = time.perf_counter() - started
    fields = tuple(ScalarField(problem.grid, values[levels.index(t)]) for t in times)
    logger.info(
        "Reference solve eps=%g finished in %.2fs, norm drift %.2e", problem.eps, seconds, drift
    )
    return ReferenceSolution(
        eps=problem.eps,
        times=tuple(times),
        fields=fields,
        norm_drift=float(drift),
        steps=int(np.ceil(times[-1] / problem.time_step - 1e-9)),
        seconds=seconds,
    )


def solve_direct(
    problem: StiffProblem, output_times: Sequence[float] | None = None
) -> ReferenceSolution:
    """Solve the stiff equation up to every output time.

    Args:
        problem: Stiff problem at one ε
        output_times: Times in (0, T]; defaults to [T]

    Returns:
        The reference solution

    Raises:
        InputError: If an output time lies outside (0, T]
        ConfigurationError: If the memory estimate exceeds the limit
        DivergenceError: If non-finite values appear
    """
    return _solve(problem, None, output_times)


def solve_direct_with_source(
    problem: StiffProblem, f_eps: Source, output_times: Sequence[float] | None = None
) -> ReferenceSolution:
    """Solve ∂_t g + A_ε·∇g + (1/ε) L·∇g = (1/ε) f_ε up to every output time.

    The source is integrated along the characteristics by the midpoint rule.

    Args:
        problem: Stiff problem at one ε (its initial data is g⁰)
        f_eps: Source f_ε(t, points)
        output_times: Times in (0, T]; defaults to [T]

    Returns:
        The reference solution

    Raises:
        InputError: If an output time lies outside (0, T]
        ConfigurationError: If the memory estimate exceeds the limit
        DivergenceError: If non-finite values appear
    """
    inverse_eps = 1.0 / problem.eps

    def scaled(t: float, points: FloatArray) -> FloatArray:
        return inverse_eps * f_eps(t, points)

    return _solve(problem, scaled, output_times)
