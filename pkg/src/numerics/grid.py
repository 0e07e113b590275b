"""Uniform tensor-product grids and the field containers sampled on them.

This module provides the TensorGrid value object (phase-space box plus the
periodic fast-time axis) and the immutable ScalarField / VectorField
containers used throughout the engine and the reference solver.
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Self

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import InputError

FloatArray = NDArray[np.float64]

MIN_AXIS_POINTS = 8
MIN_TAU_POINTS = 16
SUPPORTED_DIMS = (2, 4)


class TensorGrid(BaseModel):
    """Uniform grid over a 2D or 4D phase-space box with a periodic τ-axis on [0, θ).

    Attributes:
        lower: Lower bound per dimension
        upper: Upper bound per dimension
        points: Node count per dimension (at least 8)
        tau_points: Number of τ nodes (at least 16); node θ is identified with 0
        theta: Period of the fast variable
    """

    model_config = ConfigDict(frozen=True)

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    points: tuple[int, ...]
    tau_points: int = Field(default=32, ge=MIN_TAU_POINTS)
    theta: float = Field(default=2.0 * math.pi, gt=0.0)

    @model_validator(mode="after")
    def validate_axes(self) -> Self:
        """Validate that every axis is well formed.

        Returns:
            The validated grid

        Raises:
            ValueError: If bounds and counts disagree in length or are degenerate
        """
        if not len(self.lower) == len(self.upper) == len(self.points):
            raise ValueError("lower, upper and points must have the same length")
        if len(self.points) not in SUPPORTED_DIMS:
            raise ValueError(
                f"grid dimension must be one of {SUPPORTED_DIMS}, got {len(self.points)}"
            )
        for axis, (lo, hi, count) in enumerate(
            zip(self.lower, self.upper, self.points, strict=True)
        ):
            if count < MIN_AXIS_POINTS:
                raise ValueError(f"axis {axis} needs at least {MIN_AXIS_POINTS} points")
            if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
                raise ValueError(f"axis {axis} has an empty or non-finite range [{lo}, {hi}]")
        return self

    @classmethod
    def uniform(
        cls,
        dims: int,
        lower: float,
        upper: float,
        points: int,
        tau_points: int = 32,
        theta: float = 2.0 * math.pi,
    ) -> "TensorGrid":
        """Build a grid with identical axes.

        Args:
            dims: Number of spatial dimensions
            lower: Lower bound of every axis
            upper: Upper bound of every axis
            points: Node count of every axis
            tau_points: Number of τ nodes
            theta: Fast period

        Returns:
            The grid
        """
        return cls(
            lower=(lower,) * dims,
            upper=(upper,) * dims,
            points=(points,) * dims,
            tau_points=tau_points,
            theta=theta,
        )

    @property
    def dims(self) -> int:
        """Number of spatial dimensions."""
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape of a field sampled on the grid."""
        return self.points

    @property
    def size(self) -> int:
        """Total number of grid nodes."""
        return math.prod(self.points)

    @property
    def spacing(self) -> tuple[float, ...]:
        """Node spacing h_d per dimension."""
        return tuple(
            (hi - lo) / (count - 1)
            for lo, hi, count in zip(self.lower, self.upper, self.points, strict=True)
        )

    @property
    def cell_volume(self) -> float:
        """Product of the spacings, the quadrature weight of a node."""
        return math.prod(self.spacing)

    @property
    def tau_step(self) -> float:
        """Spacing of the τ nodes."""
        return self.theta / self.tau_points

    def tau_nodes(self) -> FloatArray:
        """Return the τ nodes jθ/tau_points, j = 0 … tau_points−1."""
        return np.arange(self.tau_points, dtype=np.float64) * self.tau_step

    def axes(self) -> list[FloatArray]:
        """Return the 1D coordinate array of every axis."""
        return [
            np.linspace(lo, hi, count)
            for lo, hi, count in zip(self.lower, self.upper, self.points, strict=True)
        ]

    def coordinates(self) -> FloatArray:
        """Return all node coordinates as an array of shape (dims, size), C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh])

    def node(self, flat_index: int) -> tuple[float, ...]:
        """Return the coordinates of a node given its flat index."""
        multi = np.unravel_index(flat_index, self.shape)
        return tuple(
            lo + int(i) * h for lo, i, h in zip(self.lower, multi, self.spacing, strict=True)
        )

    def interior_mask(self, margin: int = 2) -> NDArray[np.bool_]:
        """Flat mask selecting nodes at least `margin` nodes away from the boundary."""
        mask = np.ones(self.shape, dtype=bool)
        for axis in range(self.dims):
            index: list[slice | int] = [slice(None)] * self.dims
            index[axis] = slice(0, margin)
            mask[tuple(index)] = False
            index[axis] = slice(self.points[axis] - margin, None)
            mask[tuple(index)] = False
        return mask.reshape(-1)

    def with_points(self, points: Sequence[int]) -> "TensorGrid":
        """Return a copy of the grid with different node counts."""
        return self.model_copy(update={"points": tuple(points)})


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values sampled on every node of a grid at one time slice.

    Attributes:
        grid: Grid the values live on
        values: Node values with shape grid.shape (read-only)
    """

    grid: TensorGrid
    values: FloatArray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.size != self.grid.size:
            raise InputError(
                f"field has {values.size} values but the grid has {self.grid.size} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise InputError("field values must be finite")
        values = values.reshape(self.grid.shape)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls, grid: TensorGrid, function: Callable[[FloatArray], FloatArray]
    ) -> "ScalarField":
        """Sample a function of the node coordinates (dims, size) -> (size,)."""
        return cls(grid, function(grid.coordinates()))

    @classmethod
    def zeros(cls, grid: TensorGrid) -> "ScalarField":
        """Return the zero field on a grid."""
        return cls(grid, np.zeros(grid.shape))

    @property
    def flat(self) -> FloatArray:
        """Values as a flat array of length grid.size."""
        return self.values.reshape(-1)


@dataclass(frozen=True, eq=False)
class VectorField:
    """A vector of scalar fields sharing one grid.

    Attributes:
        components: One ScalarField per component
    """

    components: tuple[ScalarField, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise InputError("a vector field needs at least one component")
        grid = self.components[0].grid
        if any(c.grid != grid for c in self.components):
            raise InputError("all components of a vector field must share one grid")

    @classmethod
    def from_array(cls, grid: TensorGrid, values: FloatArray) -> "VectorField":
        """Build a vector field from an array of shape (components, size)."""
        return cls(tuple(ScalarField(grid, component) for component in values))

    @property
    def grid(self) -> TensorGrid:
        """Grid shared by the components."""
        return self.components[0].grid

    def stacked(self) -> FloatArray:
        """Return the components as an array of shape (components, size)."""
        return np.stack([c.flat for c in self.components])
