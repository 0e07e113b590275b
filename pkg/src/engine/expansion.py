"""Problem description consumed by the expansion engine.

This module provides the OscillatingExpansion (the two-scale coefficients
𝒜_i of the slow field), the TwoScaleProblem bundling grid, fast flow,
coefficients and initial data, and the sampled divergence check that every
coefficient must pass.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from src.errors import InputError
from src.flow.flow_map import FlowMap
from src.flow.integrators import FastField
from src.numerics.grid import FloatArray, ScalarField, TensorGrid

CoefficientField = Callable[[float, float, FloatArray], FloatArray]
"""Coefficient 𝒜_i(t, τ, points) returning an array of shape (dims, P)."""

SlowField = Callable[[float, FloatArray], FloatArray]
"""Assembled field A_ε(t, points) returning an array of shape (dims, P)."""

PointFunction = Callable[[FloatArray], FloatArray]

_DIVERGENCE_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class OscillatingExpansion:
    """Two-scale coefficients 𝒜_0 … 𝒜_K of the slow field, each θ-periodic in τ.

    Attributes:
        dims: Phase-space dimension
        theta: Period of the coefficients in τ
        coefficients: One evaluator per order; None marks an identically zero order
        tau_independent: Per order, whether the coefficient ignores τ
        t_independent: Whether no coefficient depends on the slow time
    """

    dims: int
    theta: float
    coefficients: tuple[CoefficientField | None, ...]
    tau_independent: tuple[bool, ...] = field(default=())
    t_independent: bool = False

    @property
    def order(self) -> int:
        """Highest supplied order."""
        return len(self.coefficients) - 1

    def is_zero(self, i: int) -> bool:
        """Whether 𝒜_i vanishes identically."""
        return i >= len(self.coefficients) or self.coefficients[i] is None

    def evaluate(self, i: int, t: float, tau: float, points: FloatArray) -> FloatArray:
        """Return 𝒜_i(t, τ, points), zero beyond the supplied orders."""
        coefficient = self.coefficients[i] if i < len(self.coefficients) else None
        if coefficient is None:
            return np.zeros((self.dims, points.shape[1]))
        return coefficient(t, tau, points)

    def truncated(self, order: int) -> "OscillatingExpansion":
        """Return the expansion restricted to orders ≤ `order`."""
        return OscillatingExpansion(
            dims=self.dims,
            theta=self.theta,
            coefficients=self.coefficients[: order + 1],
            tau_independent=self.tau_independent[: order + 1],
            t_independent=self.t_independent,
        )

    def is_reduced(self) -> bool:
        """Whether only 𝒜_0 is non-zero and it does not depend on τ."""
        higher_zero = all(self.is_zero(i) for i in range(1, len(self.coefficients)))
        flat = bool(self.tau_independent) and self.tau_independent[0]
        return higher_zero and flat

    def assembled(self, eps: float) -> SlowField:
        """Return A_ε(t, x) = Σ_i ε^i 𝒜_i(t, (t/ε) mod θ, x).

        Raises:
            InputError: If eps is not positive
        """
        if eps <= 0.0:
            raise InputError("eps must be positive")

        def slow_field(t: float, points: FloatArray) -> FloatArray:
            tau = (t / eps) % self.theta
            total = np.zeros((self.dims, points.shape[1]))
            for i, coefficient in enumerate(self.coefficients):
                if coefficient is not None:
                    total += eps**i * coefficient(t, tau, points)
            return total

        return slow_field


@dataclass(frozen=True, eq=False)
class TwoScaleProblem:
    """Everything needed to expand ∂_t u + A_ε·∇u + (1/ε) L·∇u = 0.

    Attributes:
        grid: Phase-space grid with the τ-axis
        flow: Characteristic flow of L
        fast_field: The fast field L(t, τ, x)
        expansion: Coefficients of A_ε
        initial: Initial data u⁰ on the grid
        horizon: Final time T
        initial_exact: Optional closed form of u⁰ for evaluation off the grid
    """

    grid: TensorGrid
    flow: FlowMap
    fast_field: FastField
    expansion: OscillatingExpansion
    initial: ScalarField
    horizon: float
    initial_exact: PointFunction | None = None

    def __post_init__(self) -> None:
        if self.horizon <= 0.0:
            raise InputError("horizon T must be positive")
        if not self.grid.dims == self.flow.dims == self.expansion.dims:
            raise InputError("grid, flow and expansion dimensions disagree")
        if not math.isclose(self.flow.theta, self.grid.theta) or not math.isclose(
            self.expansion.theta, self.grid.theta
        ):
            raise InputError("grid, flow and expansion periods disagree")


@dataclass(frozen=True)
class DivergenceReport:
    """Largest sampled divergence of the expansion coefficients.

    Attributes:
        max_divergence: Largest |∇·𝒜_i| found
        order: Order i where it occurs
        t: Slow time of the worst sample
        tau: Fast time of the worst sample
        location: Phase-space node of the worst sample
    """

    max_divergence: float
    order: int
    t: float
    tau: float
    location: tuple[float, ...]

    def passed(self, tolerance: float = 1e-6) -> bool:
        """Whether the divergence stays within the tolerance."""
        return self.max_divergence <= tolerance


def check_divergence(
    expansion: OscillatingExpansion,
    grid: TensorGrid,
    times: tuple[float, ...] = (0.0,),
    tau_samples: int = 4,
    stride: int = 1,
) -> DivergenceReport:
    """Evaluate ∇·𝒜_i by central differences at grid nodes and return the worst case.

    Args:
        expansion: Coefficients to check
        grid: Nodes at which the divergence is sampled
        times: Slow times to sample
        tau_samples: Number of evenly spaced τ values in [0, θ)
        stride: Use every `stride`-th node only

    Returns:
        The worst sample found
    """
    nodes = grid.coordinates()[:, ::stride]
    worst = DivergenceReport(0.0, 0, times[0], 0.0, tuple(float(v) for v in nodes[:, 0]))
    taus = [k * expansion.theta / tau_samples for k in range(tau_samples)]
    for i in range(len(expansion.coefficients)):
        if expansion.is_zero(i):
            continue
        for t in times:
            for tau in taus:
                divergence = np.zeros(nodes.shape[1])
                for d in range(expansion.dims):
                    shift = np.zeros_like(nodes)
                    shift[d] = _DIVERGENCE_STEP
                    forward = expansion.evaluate(i, t, tau, nodes + shift)[d]
                    backward = expansion.evaluate(i, t, tau, nodes - shift)[d]
                    divergence += (forward - backward) / (2.0 * _DIVERGENCE_STEP)
                index = int(np.argmax(np.abs(divergence)))
                value = float(abs(divergence[index]))
                if value > worst.max_divergence:
                    location = tuple(float(v) for v in nodes[:, index])
                    worst = DivergenceReport(value, i, t, tau, location)
    return worst
