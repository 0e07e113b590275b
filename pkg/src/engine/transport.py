"""Slow transport solves ∂_t V + b·∇V = s with checkpoint-sampled data.

The velocity b and source s are known only on the slow-time checkpoints of
the expansion; between checkpoints they are interpolated linearly in time and
with tensor cubics in space.
"""

import logging
from collections.abc import Sequence

import numpy as np

from src.errors import InputError
from src.numerics.characteristics import (
    PointFunction,
    RemapMode,
    Source,
    StepMethod,
    Velocity,
    transport,
)
from src.numerics.differentiation import partial_derivative
from src.numerics.grid import FloatArray, ScalarField, TensorGrid
from src.numerics.interpolation import interpolate_values

logger = logging.getLogger(__name__)

_WEIGHT_EPS = 1e-12
_DIVERGENCE_WARNING = 1e-3


def bracket(times: FloatArray, t: float) -> tuple[int, float]:
    """Return (m, w) with t = (1 − w)·times[m] + w·times[m + 1], clamped to the range."""
    last = len(times) - 1
    if last == 0:
        return 0, 0.0
    m = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, last - 1))
    w = (t - times[m]) / (times[m + 1] - times[m])
    return m, float(np.clip(w, 0.0, 1.0))


def _time_blend(
    grid: TensorGrid, times: FloatArray, samples: FloatArray, t: float, points: FloatArray
) -> FloatArray:
    m, w = bracket(times, t)
    if w < _WEIGHT_EPS:
        return interpolate_values(grid, samples[m], points)
    if w > 1.0 - _WEIGHT_EPS:
        return interpolate_values(grid, samples[m + 1], points)
    lower = interpolate_values(grid, samples[m], points)
    upper = interpolate_values(grid, samples[m + 1], points)
    return (1.0 - w) * lower + w * upper


def _is_constant_in_time(samples: FloatArray) -> bool:
    return bool(np.all(samples == samples[0]))


def checkpoint_velocity(grid: TensorGrid, times: FloatArray, fields: FloatArray) -> Velocity:
    """Velocity interpolating node values of shape (M + 1, dims, size)."""
    dims = grid.dims
    if not np.any(fields):

        def zero_velocity(t: float, points: FloatArray) -> FloatArray:
            return np.zeros((dims, points.shape[1]))

        return zero_velocity

    if _is_constant_in_time(fields):
        frozen = fields[0]

        def steady_velocity(t: float, points: FloatArray) -> FloatArray:
            return interpolate_values(grid, frozen, points)

        return steady_velocity

    def velocity(t: float, points: FloatArray) -> FloatArray:
        return _time_blend(grid, times, fields, t, points)

    return velocity


def checkpoint_source(grid: TensorGrid, times: FloatArray, values: FloatArray) -> Source | None:
    """Source interpolating node values of shape (M + 1, size); None when identically 0."""
    if not np.any(values):
        return None
    if _is_constant_in_time(values):
        frozen = values[0]

        def steady_source(t: float, points: FloatArray) -> FloatArray:
            return interpolate_values(grid, frozen, points)

        return steady_source

    def source(t: float, points: FloatArray) -> FloatArray:
        return _time_blend(grid, times, values, t, points)

    return source


def max_divergence(grid: TensorGrid, fields: FloatArray) -> float:
    """Largest |∇·b| over interior nodes and checkpoints, fields of shape (M + 1, dims, size)."""
    mask = grid.interior_mask().reshape(-1)
    divergence = sum(partial_derivative(grid, fields[:, d], d) for d in range(grid.dims))
    return float(np.max(np.abs(np.asarray(divergence)[:, mask]), initial=0.0))


def solve_transport(
    grid: TensorGrid,
    b: FloatArray,
    source: FloatArray | None,
    init: ScalarField,
    t_grid: Sequence[float] | FloatArray,
    *,
    mode: RemapMode | str = RemapMode.INITIAL,
    substeps: int = 1,
    initial_exact: PointFunction | None = None,
) -> list[ScalarField]:
    """Solve ∂_t V + b·∇V = s on the checkpoints t_grid with backward semi-Lagrangian steps.

    Characteristics are traced with the two-stage Runge–Kutta scheme and the
    source is integrated along them by the midpoint rule.

    Args:
        grid: Phase-space grid
        b: Velocity at every checkpoint, shape (M + 1, dims, size)
        source: Source at every checkpoint, shape (M + 1, size), or None
        init: V(t_grid[0])
        t_grid: Increasing checkpoint times
        mode: Remap once from the initial data or after every step
        substeps: Characteristic steps per checkpoint interval
        initial_exact: Optional closed form of the initial data

    Returns:
        V at every checkpoint

    Raises:
        InputError: If shapes disagree with the grid and checkpoints
        DivergenceError: If non-finite values appear
    """
    times = np.asarray(t_grid, dtype=np.float64)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0.0):
        raise InputError("t_grid must hold at least two increasing times")
    if b.shape != (len(times), grid.dims, grid.size):
        raise InputError(f"velocity samples have shape {b.shape}, expected "
                         f"{(len(times), grid.dims, grid.size)}")
    if source is not None and source.shape != (len(times), grid.size):
        raise InputError(f"source samples have shape {source.shape}, expected "
                         f"{(len(times), grid.size)}")
    if substeps < 1:
        raise InputError("substeps must be at least 1")

    divergence = max_divergence(grid, b) if np.any(b) else 0.0
    scale = float(np.max(np.abs(b), initial=0.0))
    if divergence > _DIVERGENCE_WARNING * max(scale, 1.0):
        logger.warning("Transport velocity is not divergence free: max |∇·b| = %.3e", divergence)

    velocity = checkpoint_velocity(grid, times, b)
    rhs = checkpoint_source(grid, times, source) if source is not None else None
    max_step = float(np.min(np.diff(times))) / substeps
    values = transport(
        grid,
        velocity,
        init.flat,
        times,
        max_step,
        source=rhs,
        method=StepMethod.HEUN,
        remap=RemapMode(mode),
        initial_exact=initial_exact,
        start_time=float(times[0]),
    )
    return [ScalarField(grid, v) for v in values]
