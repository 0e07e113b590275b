"""Backward semi-Lagrangian transport along characteristics.

This module provides the time-stepping core shared by the engine's slow
transport solves and the ε-resolving reference solver. Characteristics of a
velocity field are traced backwards from every grid node; the transported
quantity is interpolated at the feet and a source term is accumulated along
the way with the midpoint rule.
"""

import logging
import math
from collections.abc import Callable, Sequence
from enum import Enum

import numpy as np

from src.errors import DivergenceError, InputError
from src.numerics.grid import FloatArray, TensorGrid
from src.numerics.interpolation import interpolate_values

logger = logging.getLogger(__name__)

Velocity = Callable[[float, FloatArray], FloatArray]
"""Velocity b(t, points) returning an array of shape (dims, P)."""

Source = Callable[[float, FloatArray], FloatArray]
"""Source s(t, points) returning an array of shape (P,)."""

PointFunction = Callable[[FloatArray], FloatArray]

StepObserver = Callable[[float, FloatArray], None]
"""Called with (t, node values) at every new time level of a transport solve."""


class StepMethod(str, Enum):
    """Runge–Kutta scheme used for one backward characteristic step.

    Attributes:
        HEUN: Two-stage second-order scheme
        RK4: Classical four-stage scheme
    """

    HEUN = "heun"
    RK4 = "rk4"


class RemapMode(str, Enum):
    """When the transported values are interpolated.

    Attributes:
        INITIAL: Trace each node back to the start time and interpolate once
        STEP: Interpolate the previous time level after every step
    """

    INITIAL = "initial"
    STEP = "step"


def backward_step(
    velocity: Velocity, t_from: float, t_to: float, points: FloatArray, method: StepMethod
) -> FloatArray:
    """Move points along dY/dt = b(t, Y) from t_from to an earlier time t_to."""
    h = t_to - t_from
    if method is StepMethod.HEUN:
        k1 = velocity(t_from, points)
        k2 = velocity(t_to, points + h * k1)
        return points + 0.5 * h * (k1 + k2)
    t_mid = t_from + 0.5 * h
    k1 = velocity(t_from, points)
    k2 = velocity(t_mid, points + 0.5 * h * k1)
    k3 = velocity(t_mid, points + 0.5 * h * k2)
    k4 = velocity(t_to, points + h * k3)
    return points + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_count(span: float, max_step: float) -> int:
    """Number of uniform steps of length at most `max_step` covering `span`."""
    if span <= 0.0:
        return 0
    return max(1, math.ceil(span / max_step - 1e-9))


def _ensure_finite(array: FloatArray, step: int) -> None:
    if not np.all(np.isfinite(array)):
        raise DivergenceError("non-finite values during characteristic transport", step=step)


def trace_back(
    velocity: Velocity,
    points: FloatArray,
    t_end: float,
    t_start: float,
    max_step: float,
    method: StepMethod,
    source: Source | None = None,
) -> tuple[FloatArray, FloatArray]:
    """Trace characteristics from t_end back to t_start.

    Args:
        velocity: Velocity field b(t, points)
        points: Starting points at t_end, shape (dims, P)
        t_end: Time the characteristics start from
        t_start: Earlier time they are traced back to
        max_step: Largest allowed step
        method: Runge–Kutta scheme
        source: Optional source integrated along the characteristics

    Returns:
        Feet at t_start (dims, P) and the integrated source (P,)

    Raises:
        DivergenceError: If the traced points stop being finite
    """
    steps = step_count(t_end - t_start, max_step)
    accumulated = np.zeros(points.shape[1])
    current = np.array(points, dtype=np.float64)
    if steps == 0:
        return current, accumulated
    h = (t_end - t_start) / steps
    for n in range(steps):
        t_hi = t_end - n * h
        t_lo = t_end - (n + 1) * h
        previous = current
        current = backward_step(velocity, t_hi, t_lo, previous, method)
        _ensure_finite(current, n)
        if source is not None:
            accumulated += h * source(0.5 * (t_hi + t_lo), 0.5 * (previous + current))
            _ensure_finite(accumulated, n)
    return current, accumulated


def transport(
    grid: TensorGrid,
    velocity: Velocity,
    initial: FloatArray,
    output_times: Sequence[float],
    max_step: float,
    *,
    source: Source | None = None,
    method: StepMethod = StepMethod.HEUN,
    remap: RemapMode = RemapMode.INITIAL,
    initial_exact: PointFunction | None = None,
    start_time: float = 0.0,
    on_step: StepObserver | None = None,
) -> list[FloatArray]:
    """Solve ∂_t u + b·∇u = s on the grid nodes with a backward semi-Lagrangian scheme.

    Args:
        grid: Grid of the unknown
        velocity: Velocity b(t, points)
        initial: Node values at start_time, shape (size,)
        output_times: Increasing times at which the solution is returned
        max_step: Largest time step
        source: Optional source s(t, points)
        method: Runge–Kutta scheme for the characteristics
        remap: Remap once from the initial data or after every step
        initial_exact: Optional closed form of the initial data evaluated at the feet
        start_time: Time of the initial data
        on_step: Optional observer of every time level: each step with
            remap="step", each output time with remap="initial"

    Returns:
        Node values (size,) for every output time

    Raises:
        InputError: If output times are not increasing or precede start_time
        DivergenceError: If non-finite values appear
    """
    times = [float(t) for t in output_times]
    if any(t < start_time for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise InputError("output times must be increasing and not before the start time")
    if max_step <= 0.0:
        raise InputError("max_step must be positive")
    initial = np.asarray(initial, dtype=np.float64).reshape(-1)
    nodes = grid.coordinates()

    def initial_at(points: FloatArray) -> FloatArray:
        if initial_exact is not None:
            return initial_exact(points)
        return interpolate_values(grid, initial, points)

    results: list[FloatArray] = []
    if remap is RemapMode.INITIAL:
        for t_out in times:
            feet, accumulated = trace_back(
                velocity, nodes, t_out, start_time, max_step, method, source
            )
            if t_out == start_time:
                results.append(initial.copy())
                continue
            results.append(initial_at(feet) + accumulated)
            if on_step is not None:
                on_step(t_out, results[-1])
        return results

    current = initial.copy()
    t_now = start_time
    step_index = 0
    for t_out in times:
        steps = step_count(t_out - t_now, max_step)
        h = (t_out - t_now) / steps if steps else 0.0
        for n in range(steps):
            t_lo = t_now + n * h
            t_hi = t_lo + h
            feet = backward_step(velocity, t_hi, t_lo, nodes, method)
            _ensure_finite(feet, step_index)
            updated = interpolate_values(grid, current, feet)
            if source is not None:
                updated += h * source(0.5 * (t_lo + t_hi), 0.5 * (nodes + feet))
            _ensure_finite(updated, step_index)
            current = updated
            step_index += 1
            if on_step is not None:
                on_step(t_hi, current)
        t_now = t_out
        results.append(current.copy())
    logger.debug("Step-remap transport finished after %d steps", step_index)
    return results
