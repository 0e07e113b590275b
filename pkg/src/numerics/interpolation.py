"""Tensor-product cubic Lagrange interpolation on uniform grids.

Each axis uses the 4-node Lagrange stencil around the evaluation point,
shifted inwards next to the boundary so that every stencil stays inside the
grid. Points outside the box evaluate to zero.
"""

import itertools
import math
from collections.abc import Sequence

import numpy as np
from numpy.typing import NDArray

from src.errors import InputError
from src.numerics.grid import FloatArray, ScalarField, TensorGrid

# Relative slack for points that sit on the box boundary up to rounding.
_BOX_SLACK = 1e-10


def _axis_stencil(
    coord: FloatArray, lower: float, spacing: float, count: int
) -> tuple[NDArray[np.intp], FloatArray]:
    """Return the first stencil node and the 4 Lagrange weights along one axis."""
    s = (coord - lower) / spacing
    base = np.clip(np.floor(s).astype(np.intp) - 1, 0, count - 4)
    u = s - base
    weights = np.stack(
        [
            -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
            u * (u - 2.0) * (u - 3.0) / 2.0,
            -u * (u - 1.0) * (u - 3.0) / 2.0,
            u * (u - 1.0) * (u - 2.0) / 6.0,
        ]
    )
    return base, weights


def inside_box(grid: TensorGrid, points: FloatArray) -> NDArray[np.bool_]:
    """Return a mask of the points lying inside the grid box."""
    mask = np.ones(points.shape[1], dtype=bool)
    for axis, (lo, hi, h) in enumerate(zip(grid.lower, grid.upper, grid.spacing, strict=True)):
        slack = _BOX_SLACK * h
        mask &= (points[axis] >= lo - slack) & (points[axis] <= hi + slack)
    return mask


def interpolate_values(grid: TensorGrid, values: FloatArray, points: FloatArray) -> FloatArray:
    """Interpolate a batch of node-value arrays at arbitrary points.

    Args:
        grid: Grid the values are sampled on
        values: Array of shape (*batch, size) or (*batch, *grid.shape)
        points: Evaluation points of shape (dims, P)

    Returns:
        Interpolated values of shape (*batch, P); zero outside the box

    Raises:
        InputError: If points contain non-finite entries or have the wrong dimension
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] != grid.dims:
        raise InputError(f"points must have shape ({grid.dims}, P), got {points.shape}")
    if not np.all(np.isfinite(points)):
        raise InputError("interpolation points must be finite")

    values = np.asarray(values, dtype=np.float64)
    if values.shape[-grid.dims :] == grid.shape and values.shape[-1:] != (grid.size,):
        values = values.reshape(*values.shape[: -grid.dims], grid.size)
    if values.shape[-1] != grid.size:
        raise InputError(f"values do not match a grid of {grid.size} nodes")
    batch = values.shape[:-1]

    strides = [math.prod(grid.shape[axis + 1 :]) for axis in range(grid.dims)]
    stencils = [
        _axis_stencil(points[axis], grid.lower[axis], grid.spacing[axis], grid.points[axis])
        for axis in range(grid.dims)
    ]

    result = np.zeros((*batch, points.shape[1]))
    for offsets in itertools.product(range(4), repeat=grid.dims):
        flat_index = np.zeros(points.shape[1], dtype=np.intp)
        weight = np.ones(points.shape[1])
        for axis, offset in enumerate(offsets):
            base, weights = stencils[axis]
            flat_index += (base + offset) * strides[axis]
            weight *= weights[offset]
        result += np.take(values, flat_index, axis=-1) * weight

    outside = ~inside_box(grid, points)
    if np.any(outside):
        result[..., outside] = 0.0
    return result


def interpolate(field: ScalarField, x: Sequence[float] | FloatArray) -> float:
    """Interpolate a scalar field at one point.

    Args:
        field: Field to evaluate
        x: Point with one coordinate per grid dimension

    Returns:
        Cubic interpolant at x, or 0 when x lies outside the grid box

    Raises:
        InputError: If x is not finite
    """
    point = np.asarray(x, dtype=np.float64).reshape(field.grid.dims, 1)
    return float(interpolate_values(field.grid, field.flat, point)[0])
