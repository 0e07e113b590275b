"""Grid-weighted discrete L^p norms."""

import math

import numpy as np

from src.errors import InputError
from src.numerics.grid import FloatArray, ScalarField, TensorGrid

SUPPORTED_NORMS = (1.0, 2.0, math.inf)


def parse_norm(value: int | float | str) -> float:
    """Convert a norm label ("1", "2", "inf", 1, 2) to its exponent.

    Raises:
        InputError: If the label is not one of 1, 2 or inf
    """
    text = str(value).strip().lower()
    mapping = {"1": 1.0, "2": 2.0, "inf": math.inf, "infinity": math.inf, "1.0": 1.0, "2.0": 2.0}
    if text not in mapping:
        raise InputError(f"unsupported norm {value!r}; use 1, 2 or inf")
    return mapping[text]


def norm_label(p: float) -> str:
    """Return the canonical label of a norm exponent."""
    return "inf" if math.isinf(p) else str(int(p))


def norm_values(grid: TensorGrid, values: FloatArray, p: float = 2.0) -> float:
    """Return the discrete L^p norm of node values, Π h_d-weighted for finite p."""
    if p not in SUPPORTED_NORMS:
        raise InputError(f"unsupported norm exponent {p}")
    flat = np.abs(np.asarray(values, dtype=np.float64).reshape(-1))
    if flat.size == 0:
        return 0.0
    if math.isinf(p):
        return float(np.max(flat))
    if p == 1.0:
        return float(grid.cell_volume * np.sum(flat))
    return float(math.sqrt(grid.cell_volume * float(np.sum(flat * flat))))


def norm(field: ScalarField, p: float = 2.0) -> float:
    """Return the grid-weighted L^p norm of a field, p ∈ {1, 2, ∞}."""
    return norm_values(field.grid, field.flat, p)
