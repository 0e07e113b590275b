"""Periodic quadrature, antiderivatives and interpolation along the τ-axis.

All routines act on samples taken at the left-endpoint τ nodes of a
TensorGrid; the node at θ is identified with τ = 0.
"""

import numpy as np

from src.errors import InputError
from src.numerics.grid import FloatArray, TensorGrid


def _check_samples(samples: FloatArray, grid: TensorGrid, axis: int) -> FloatArray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 0 or samples.shape[axis] != grid.tau_points:
        raise InputError(
            f"expected {grid.tau_points} τ samples along axis {axis}, got shape {samples.shape}"
        )
    return samples


def quad_tau(samples: FloatArray, grid: TensorGrid, axis: int = 0) -> FloatArray | float:
    """Integrate θ-periodic samples over one period with the periodic trapezoid rule.

    Args:
        samples: Values at the τ nodes along `axis`
        grid: Grid providing θ and the node count
        axis: Axis holding the τ samples

    Returns:
        θ/tau_points · Σ samples, reduced along `axis`

    Raises:
        InputError: If the sample count does not match the grid
    """
    samples = _check_samples(samples, grid, axis)
    result = grid.tau_step * np.sum(samples, axis=axis)
    if np.ndim(result) == 0:
        return float(result)
    return np.asarray(result)


def tau_average(samples: FloatArray, grid: TensorGrid, axis: int = 0) -> FloatArray:
    """Return the period average (1/θ)∫₀^θ of the samples."""
    samples = _check_samples(samples, grid, axis)
    return np.asarray(np.mean(samples, axis=axis))


def cumquad_tau(samples: FloatArray, grid: TensorGrid, axis: int = 0) -> FloatArray:
    """Cumulative trapezoid integral ∫₀^τ_j at every τ node; entry 0 is 0."""
    samples = _check_samples(samples, grid, axis)
    moved = np.moveaxis(samples, axis, 0)
    result = np.zeros_like(moved)
    panels = 0.5 * grid.tau_step * (moved[1:] + moved[:-1])
    result[1:] = np.cumsum(panels, axis=0)
    return np.moveaxis(result, 0, axis)


def cumquad_tau_spectral(samples: FloatArray, grid: TensorGrid, axis: int = 0) -> FloatArray:
    """Spectral antiderivative ∫₀^τ_j of θ-periodic samples.

    The mean is integrated exactly as a linear function of τ; the oscillating
    modes are integrated in Fourier space with the Nyquist mode dropped.
    Entry 0 is 0 and continuing one full period reproduces quad_tau.
    """
    samples = _check_samples(samples, grid, axis)
    moved = np.moveaxis(samples, axis, 0)
    count = grid.tau_points
    coefficients = np.fft.rfft(moved, axis=0)
    mean = coefficients[0].real / count
    wavenumbers = 2.0 * np.pi * np.arange(coefficients.shape[0]) / grid.theta
    shape = (-1,) + (1,) * (moved.ndim - 1)
    wavenumbers = wavenumbers.reshape(shape)
    coefficients[0] = 0.0
    if count % 2 == 0:
        coefficients[-1] = 0.0
    coefficients[1:] = coefficients[1:] / (1j * wavenumbers[1:])
    periodic = np.fft.irfft(coefficients, n=count, axis=0)
    tau = grid.tau_nodes().reshape(shape)
    result = mean * tau + periodic - periodic[0]
    return np.moveaxis(result, 0, axis)


def tau_interpolate(samples: FloatArray, grid: TensorGrid, tau: float, axis: int = 0) -> FloatArray:
    """Evaluate the trigonometric interpolant of θ-periodic samples at one τ.

    Returns the samples' slice itself when τ falls on a node.
    """
    samples = _check_samples(samples, grid, axis)
    moved = np.moveaxis(samples, axis, 0)
    phase = (tau % grid.theta) / grid.tau_step
    nearest = round(phase)
    if abs(phase - nearest) < 1e-12:
        return np.array(moved[nearest % grid.tau_points])
    count = grid.tau_points
    coefficients = np.fft.rfft(moved, axis=0) / count
    modes = np.arange(coefficients.shape[0])
    factors = np.full(coefficients.shape[0], 2.0)
    factors[0] = 1.0
    if count % 2 == 0:
        factors[-1] = 1.0
    angle = 2.0 * np.pi * modes * (tau % grid.theta) / grid.theta
    basis = factors * np.exp(1j * angle)
    return np.asarray(np.tensordot(basis, coefficients, axes=(0, 0)).real)


def refine_tau(samples: FloatArray, grid: TensorGrid, axis: int = 0) -> FloatArray:
    """Trigonometric interpolant of θ-periodic samples on twice as many τ nodes.

    Even entries of the result reproduce the samples; the Nyquist mode of an
    even node count is split evenly between ±tau_points/2.
    """
    samples = _check_samples(samples, grid, axis)
    moved = np.moveaxis(samples, axis, 0)
    count = grid.tau_points
    coefficients = np.fft.rfft(moved, axis=0)
    if count % 2 == 0:
        coefficients[-1] *= 0.5
    refined = 2.0 * np.fft.irfft(coefficients, n=2 * count, axis=0)
    return np.moveaxis(refined, 0, axis)
