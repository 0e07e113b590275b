"""Characteristic flow maps X(τ; x, t; σ) of the fast field.

This module provides the FlowMap interface used by the engine together with
three implementations: closed-form flows given by callables, autonomous
linear flows given by a matrix exponential-like function of τ − σ (the preset
case), and flows obtained by Runge–Kutta integration of the fast field.
"""

from abc import ABC, abstractmethod
from collections.abc import Callable
from enum import Enum

import numpy as np

from src.errors import InputError
from src.flow.integrators import (
    FastField,
    FastFieldGradient,
    integrate_flow,
    integrate_variational,
)
from src.numerics.grid import FloatArray

FlowFunction = Callable[[float, FloatArray, float, float], FloatArray]
"""Closed-form map (τ, points, t, σ) -> array."""

MatrixFunction = Callable[[float], FloatArray]
"""Matrix-valued function of the fast-time lag τ − σ."""

RELATIVE_H_T = 1e-4


class FlowKind(str, Enum):
    """How a flow map is evaluated.

    Attributes:
        ANALYTIC: Closed-form expressions
        NUMERIC: Runge–Kutta integration of the fast field
    """

    ANALYTIC = "analytic"
    NUMERIC = "numeric"


class FlowMap(ABC):
    """Characteristic flow of the fast field L.

    Attributes:
        dims: Phase-space dimension
        theta: Period of the flow in τ
        kind: Analytic or numeric evaluation
    """

    kind: FlowKind

    def __init__(self, dims: int, theta: float) -> None:
        if theta <= 0.0:
            raise InputError("flow period must be positive")
        self.dims = dims
        self.theta = theta

    @abstractmethod
    def evaluate(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        """Return X(τ; x, t; σ) for points of shape (dims, P)."""

    @abstractmethod
    def jacobian(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        """Return ∇_x X(τ; x, t; σ) with shape (dims, dims, P)."""

    @abstractmethod
    def dt(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        """Return ∂_t X(τ; x, t; σ) with shape (dims, P)."""

    @property
    def t_independent(self) -> bool:
        """Whether X does not depend on the slow time t (so ∂_t X ≡ 0)."""
        return False

    def uniform_jacobian(self, tau: float, t: float, sigma: float = 0.0) -> FloatArray | None:
        """Return ∇_x X when it does not depend on x, otherwise None."""
        return None


class AnalyticFlow(FlowMap):
    """Flow given by closed-form callables."""

    kind = FlowKind.ANALYTIC

    def __init__(
        self,
        dims: int,
        theta: float,
        map_function: FlowFunction,
        jacobian_function: Callable[[float, FloatArray, float, float], FloatArray],
        dt_function: FlowFunction | None = None,
    ) -> None:
        super().__init__(dims, theta)
        self._map = map_function
        self._jacobian = jacobian_function
        self._dt = dt_function

    @property
    def t_independent(self) -> bool:
        return self._dt is None

    def evaluate(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        return self._map(tau, points, t, sigma)

    def jacobian(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        return self._jacobian(tau, points, t, sigma)

    def dt(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        if self._dt is None:
            return np.zeros_like(points, dtype=np.float64)
        return self._dt(tau, points, t, sigma)


class LinearFlow(FlowMap):
    """Autonomous linear flow X(τ; x, t; σ) = Φ(τ − σ) x with θ-periodic Φ.

    The lag is reduced modulo θ before Φ is evaluated, so the period closure
    holds exactly in floating point.
    """

    kind = FlowKind.ANALYTIC

    def __init__(self, dims: int, theta: float, matrix: MatrixFunction) -> None:
        super().__init__(dims, theta)
        self._matrix = matrix

    @property
    def t_independent(self) -> bool:
        return True

    def matrix(self, lag: float) -> FloatArray:
        """Return Φ at a fast-time lag, reduced modulo θ."""
        return np.asarray(self._matrix(float(lag) % self.theta), dtype=np.float64)

    def evaluate(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        return self.matrix(tau - sigma) @ points

    def jacobian(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        matrix = self.matrix(tau - sigma)
        return np.repeat(matrix[:, :, None], points.shape[1], axis=2)

    def dt(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        return np.zeros_like(points, dtype=np.float64)

    def uniform_jacobian(self, tau: float, t: float, sigma: float = 0.0) -> FloatArray | None:
        return self.matrix(tau - sigma)


class NumericFlow(FlowMap):
    """Flow obtained by integrating the fast field with classical Runge–Kutta.

    Attributes:
        substeps_per_unit: Runge–Kutta steps per unit of fast time
        h_t: Step of the central difference used for ∂_t X, by default
            RELATIVE_H_T times the horizon
    """

    kind = FlowKind.NUMERIC

    def __init__(
        self,
        dims: int,
        theta: float,
        field: FastField,
        field_gradient: FastFieldGradient | None = None,
        substeps_per_unit: int = 64,
        h_t: float | None = None,
        horizon: float = 1.0,
    ) -> None:
        super().__init__(dims, theta)
        if horizon <= 0.0:
            raise InputError("horizon must be positive")
        h_t = RELATIVE_H_T * horizon if h_t is None else h_t
        if h_t <= 0.0:
            raise InputError("h_t must be positive")
        self.field = field
        self.field_gradient = field_gradient
        self.substeps_per_unit = substeps_per_unit
        self.h_t = h_t

    def evaluate(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        return integrate_flow(self.field, t, sigma, tau, points, self.substeps_per_unit)

    def jacobian(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        _, jac = integrate_variational(
            self.field, t, sigma, tau, points, self.substeps_per_unit, self.field_gradient
        )
        return jac

    def dt(self, tau: float, points: FloatArray, t: float, sigma: float = 0.0) -> FloatArray:
        return flow_dt(self, tau, points, t, sigma, self.h_t)


def flow_jacobian(
    flow: FlowMap, tau: float, points: FloatArray, t: float, sigma: float = 0.0
) -> FloatArray:
    """Return ∇_x X(τ; x, t; σ): variational integration or the closed form."""
    return flow.jacobian(tau, points, t, sigma)


def flow_dt(
    flow: FlowMap,
    tau: float,
    points: FloatArray,
    t: float,
    sigma: float = 0.0,
    h_t: float = RELATIVE_H_T,
) -> FloatArray:
    """Return ∂_t X by the central difference (X(t + h_t) − X(t − h_t)) / (2 h_t).

    Analytic flows return their closed form instead.

    Raises:
        InputError: If h_t is not positive
    """
    if h_t <= 0.0:
        raise InputError("h_t must be positive")
    if flow.kind is FlowKind.ANALYTIC:
        return flow.dt(tau, points, t, sigma)
    forward = flow.evaluate(tau, points, t + h_t, sigma)
    backward = flow.evaluate(tau, points, t - h_t, sigma)
    return (forward - backward) / (2.0 * h_t)
