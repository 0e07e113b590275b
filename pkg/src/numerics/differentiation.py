"""Fourth-order finite-difference gradients on uniform grids."""

import numpy as np

from src.errors import InputError
from src.numerics.grid import FloatArray, ScalarField, TensorGrid, VectorField


def _derivative_last_axis(f: FloatArray, h: float) -> FloatArray:
    d = np.empty_like(f)
    d[..., 2:-2] = (f[..., :-4] - 8.0 * f[..., 1:-3] + 8.0 * f[..., 3:-1] - f[..., 4:]) / (12.0 * h)
    # one-sided fourth-order stencils next to each end
    d[..., 0] = (
        -25.0 * f[..., 0] + 48.0 * f[..., 1] - 36.0 * f[..., 2] + 16.0 * f[..., 3] - 3.0 * f[..., 4]
    ) / (12.0 * h)
    d[..., 1] = (
        -3.0 * f[..., 0] - 10.0 * f[..., 1] + 18.0 * f[..., 2] - 6.0 * f[..., 3] + f[..., 4]
    ) / (12.0 * h)
    d[..., -1] = (
        25.0 * f[..., -1]
        - 48.0 * f[..., -2]
        + 36.0 * f[..., -3]
        - 16.0 * f[..., -4]
        + 3.0 * f[..., -5]
    ) / (12.0 * h)
    d[..., -2] = (
        3.0 * f[..., -1] + 10.0 * f[..., -2] - 18.0 * f[..., -3] + 6.0 * f[..., -4] - f[..., -5]
    ) / (12.0 * h)
    return d


def partial_derivative(grid: TensorGrid, values: FloatArray, axis: int) -> FloatArray:
    """Differentiate node values along one grid axis.

    Args:
        grid: Grid the values are sampled on
        values: Array of shape (*batch, size)
        axis: Grid axis to differentiate along

    Returns:
        Derivative values with the same shape as `values`
    """
    batch = values.shape[:-1]
    shaped = values.reshape(*batch, *grid.shape)
    position = len(batch) + axis
    moved = np.moveaxis(shaped, position, -1)
    derivative = _derivative_last_axis(moved, grid.spacing[axis])
    return np.moveaxis(derivative, -1, position).reshape(values.shape)


def gradient_values(grid: TensorGrid, values: FloatArray) -> FloatArray:
    """Return the gradient of a batch of node-value arrays.

    Args:
        grid: Grid the values are sampled on
        values: Array of shape (*batch, size)

    Returns:
        Array of shape (dims, *batch, size)

    Raises:
        InputError: If the trailing axis does not match the grid size
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] != grid.size:
        raise InputError(f"values do not match a grid of {grid.size} nodes")
    return np.stack([partial_derivative(grid, values, axis) for axis in range(grid.dims)])


def gradient(field: ScalarField) -> VectorField:
    """Return the fourth-order gradient of a scalar field."""
    return VectorField.from_array(field.grid, gradient_values(field.grid, field.flat))
