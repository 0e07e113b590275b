"""Runge–Kutta integration of the frozen-t characteristic system.

This module integrates ∂_τ X = L(t, τ, X) from X(σ) = x with the classical
four-stage scheme and, alongside, the variational equation
∂_τ J = (∇_x L)(t, τ, X)·J that yields the space Jacobian ∇_x X.
"""

import math
from collections.abc import Callable

import numpy as np

from src.errors import DivergenceError, InputError
from src.numerics.grid import FloatArray

FastField = Callable[[float, float, FloatArray], FloatArray]
"""Fast field L(t, τ, points) returning an array of shape (dims, P)."""

FastFieldGradient = Callable[[float, float, FloatArray], FloatArray]
"""Space gradient (∇_x L)(t, τ, points) with shape (dims, dims, P), entry [i, j] = ∂_j L_i."""

MIN_SUBSTEPS_PER_UNIT = 8
_GRADIENT_STEP = 1e-6


def rk4_step(
    f: Callable[[float, FloatArray], FloatArray], s: float, y: FloatArray, h: float
) -> FloatArray:
    """Take a single classical Runge–Kutta step of dy/ds = f(s, y)."""
    k1 = f(s, y)
    k2 = f(s + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(s + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(s + h, y + h * k3)
    return y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def _step_plan(sigma: float, tau: float, substeps_per_unit: int) -> tuple[int, float]:
    if substeps_per_unit < MIN_SUBSTEPS_PER_UNIT:
        raise InputError(f"substeps_per_unit must be at least {MIN_SUBSTEPS_PER_UNIT}")
    steps = max(1, math.ceil(abs(tau - sigma) * substeps_per_unit - 1e-9))
    return steps, (tau - sigma) / steps


def _as_points(x: FloatArray) -> tuple[FloatArray, bool]:
    array = np.array(x, dtype=np.float64)
    if array.ndim == 1:
        return array.reshape(-1, 1), True
    return array, False


def finite_difference_gradient(field: FastField) -> FastFieldGradient:
    """Build ∇_x L by central differences of a fast field."""

    def gradient(t: float, tau: float, points: FloatArray) -> FloatArray:
        dims = points.shape[0]
        columns = []
        for j in range(dims):
            shift = np.zeros_like(points)
            shift[j] = _GRADIENT_STEP
            forward = field(t, tau, points + shift)
            backward = field(t, tau, points - shift)
            columns.append((forward - backward) / (2.0 * _GRADIENT_STEP))
        return np.stack(columns, axis=1)

    return gradient


def integrate_flow(
    field: FastField,
    t: float,
    sigma: float,
    tau: float,
    x: FloatArray,
    substeps_per_unit: int = 64,
) -> FloatArray:
    """Integrate the characteristic system from σ to τ at frozen t.

    Args:
        field: Fast field L(t, τ, points)
        t: Slow time, a parameter of the ODE
        sigma: Initial fast time
        tau: Final fast time
        x: Initial point (dims,) or points (dims, P)
        substeps_per_unit: Steps per unit of fast time (at least 8)

    Returns:
        X(τ; x, t; σ) with the shape of x

    Raises:
        InputError: If substeps_per_unit is below 8
        DivergenceError: If the state stops being finite
    """
    points, single = _as_points(x)
    steps, h = _step_plan(sigma, tau, substeps_per_unit)
    if tau == sigma:
        return points[:, 0] if single else points

    def rhs(s: float, y: FloatArray) -> FloatArray:
        return field(t, s, y)

    state = points
    for n in range(steps):
        state = rk4_step(rhs, sigma + n * h, state, h)
        if not np.all(np.isfinite(state)):
            raise DivergenceError("characteristic left the finite range", step=n)
    return state[:, 0] if single else state


def integrate_variational(
    field: FastField,
    t: float,
    sigma: float,
    tau: float,
    x: FloatArray,
    substeps_per_unit: int = 64,
    field_gradient: FastFieldGradient | None = None,
) -> tuple[FloatArray, FloatArray]:
    """Integrate the characteristic system together with its variational equation.

    Args:
        field: Fast field L(t, τ, points)
        t: Slow time
        sigma: Initial fast time
        tau: Final fast time
        x: Initial points (dims, P) or a single point (dims,)
        substeps_per_unit: Steps per unit of fast time (at least 8)
        field_gradient: ∇_x L; central differences of `field` when omitted

    Returns:
        X(τ; x, t; σ) and ∇_x X with shape (dims, dims, P) (or (dims, dims) for one point)

    Raises:
        InputError: If substeps_per_unit is below 8
        DivergenceError: If the state stops being finite
    """
    points, single = _as_points(x)
    dims, count = points.shape
    steps, h = _step_plan(sigma, tau, substeps_per_unit)
    identity = np.repeat(np.eye(dims)[:, :, None], count, axis=2)
    gradient = field_gradient or finite_difference_gradient(field)

    def rhs(s: float, y: FloatArray) -> FloatArray:
        state = y[:dims]
        jac = y[dims:].reshape(dims, dims, count)
        d_state = field(t, s, state)
        d_jac = np.einsum("ikp,kjp->ijp", gradient(t, s, state), jac)
        return np.concatenate([d_state, d_jac.reshape(dims * dims, count)])

    combined = np.concatenate([points, identity.reshape(dims * dims, count)])
    if tau != sigma:
        for n in range(steps):
            combined = rk4_step(rhs, sigma + n * h, combined, h)
            if not np.all(np.isfinite(combined)):
                raise DivergenceError("variational system left the finite range", step=n)
    state = combined[:dims]
    jac = combined[dims:].reshape(dims, dims, count)
    if single:
        return state[:, 0], jac[:, :, 0]
    return state, jac
