"""Limit of the transport equation with a stiff source term.

For ∂_t g_ε + A_ε·∇g_ε + (1/ε) L·∇g_ε = (1/ε) f_ε with
f_ε(t, x) = F(t, t/ε, x) + ε F₁(t, t/ε, x) and F of zero mean along the fast
flow, the corrector S(t, τ, y) = ∫₀^τ F(t, σ, X(σ; y, t; 0)) dσ removes the
stiff part: h_ε(t, y) = g_ε(t, X(t/ε; y, t; 0)) − S(t, t/ε, y) converges to
the solution H of

    ∂_t H + ã_0·∇H = ⟨F₁∘X⟩ − ⟨∂_tS + α_0·∇S⟩,   H(0) = g⁰.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from src.config.models import ExpansionSettings
from src.engine.expansion import PointFunction, TwoScaleProblem
from src.engine.recursion import generic_alpha_table, time_derivative
from src.engine.transport import solve_transport
from src.errors import InputError
from src.flow.flow_map import FlowMap
from src.numerics.characteristics import Source
from src.numerics.differentiation import gradient_values
from src.numerics.grid import FloatArray, ScalarField
from src.numerics.interpolation import interpolate_values
from src.numerics.quadrature import cumquad_tau, cumquad_tau_spectral, tau_interpolate

logger = logging.getLogger(__name__)

SourceProfile = Callable[[float, float, FloatArray], FloatArray]
"""Source profile F(t, τ, points) returning an array of shape (P,)."""


@dataclass(frozen=True, eq=False)
class SourceTerm:
    """Two-scale source f_ε = F(t, t/ε, x) + ε F₁(t, t/ε, x).

    Attributes:
        theta: Period of the profiles in τ
        leading: Profile F, of zero mean along the fast flow
        first_order: Optional profile F₁
    """

    theta: float
    leading: SourceProfile
    first_order: SourceProfile | None = None

    def assembled(self, eps: float) -> Source:
        """Return f_ε(t, points).

        Raises:
            InputError: If eps is not positive
        """
        if eps <= 0.0:
            raise InputError("eps must be positive")

        def source(t: float, points: FloatArray) -> FloatArray:
            tau = (t / eps) % self.theta
            value = self.leading(t, tau, points)
            if self.first_order is not None:
                value = value + eps * self.first_order(t, tau, points)
            return value

        return source


def rotating_source(flow: FlowMap, profile: PointFunction) -> SourceTerm:
    """Source F(t, τ, x) = cos(2πτ/θ)·φ(X(−τ; x, t; 0)).

    Along the fast flow F equals cos(2πσ/θ)·φ(y), so its mean vanishes and
    S(t, τ, y) = (θ/2π)·sin(2πτ/θ)·φ(y).
    """
    frequency = 2.0 * math.pi / flow.theta

    def leading(t: float, tau: float, points: FloatArray) -> FloatArray:
        return math.cos(frequency * tau) * profile(flow.evaluate(-tau, points, t))

    return SourceTerm(theta=flow.theta, leading=leading)


def pulled_back_source(
    problem: TwoScaleProblem, profile: SourceProfile, t: float
) -> FloatArray:
    """F(t, τ_j, X(τ_j; y_n, t; 0)) at every τ node and grid node, shape (tau_points, size)."""
    grid = problem.grid
    nodes = grid.coordinates()
    return np.stack(
        [profile(t, tau, problem.flow.evaluate(tau, nodes, t)) for tau in grid.tau_nodes()]
    )


def source_mean_residual(problem: TwoScaleProblem, source: SourceTerm, t: float) -> float:
    """Largest |(1/θ)∫₀^θ F(t, τ, X(τ; y, t; 0)) dτ| over the nodes."""
    samples = pulled_back_source(problem, source.leading, t)
    return float(np.max(np.abs(np.mean(samples, axis=0)), initial=0.0))


def corrector_S(
    problem: TwoScaleProblem, source: SourceTerm, t: float, tau_integration: str = "spectral"
) -> FloatArray:
    """S(t, τ_j, y_n) = ∫₀^τ_j F(t, σ, X(σ; y_n, t; 0)) dσ, shape (tau_points, size)."""
    samples = pulled_back_source(problem, source.leading, t)
    if tau_integration == "trapezoid":
        return cumquad_tau(samples, problem.grid)
    return cumquad_tau_spectral(samples, problem.grid)


def solve_H(
    problem: TwoScaleProblem, source: SourceTerm, settings: ExpansionSettings
) -> tuple[FloatArray, list[ScalarField]]:
    """Solve the limit equation for H on uniform checkpoints over [0, T].

    Args:
        problem: Problem supplying the flow, ã_0 and the initial data g⁰
        source: Two-scale source term
        settings: Engine options (checkpoints, τ integration, transport mode)

    Returns:
        Checkpoint times and H on every checkpoint

    Raises:
        ConfigurationError: If fewer than 3 checkpoints are configured
    """
    grid = problem.grid
    times = np.linspace(0.0, problem.horizon, settings.checkpoints + 1)
    table = generic_alpha_table(problem, settings.det_guard)
    nodes = grid.coordinates()
    residual = source_mean_residual(problem, source, 0.0)
    if residual > 1e-8:
        logger.warning("Source has non-zero mean along the fast flow: %.3e", residual)

    correctors = np.stack(
        [corrector_S(problem, source, float(t), settings.tau_integration) for t in times]
    )
    velocities = np.empty((len(times), grid.dims, grid.size))
    rhs = np.empty((len(times), grid.size))
    for m, t in enumerate(times):
        alpha_0 = table(0, float(t), nodes)
        velocities[m] = np.mean(alpha_0, axis=0)
        grad_s = np.moveaxis(gradient_values(grid, correctors[m]), 0, 1)
        drift = time_derivative(correctors, times, m) + np.einsum("sdn,sdn->sn", alpha_0, grad_s)
        rhs[m] = -np.mean(drift, axis=0)
        if source.first_order is not None:
            rhs[m] += np.mean(pulled_back_source(problem, source.first_order, float(t)), axis=0)

    fields = solve_transport(
        grid,
        velocities,
        rhs,
        problem.initial,
        times,
        mode=settings.transport_mode,
        substeps=settings.transport_substeps,
        initial_exact=problem.initial_exact,
    )
    return times, fields


def pullback_h(
    problem: TwoScaleProblem,
    g: ScalarField,
    eps: float,
    t: float,
    source: SourceTerm,
    tau_integration: str = "spectral",
) -> ScalarField:
    """Return h_ε(t, y) = g_ε(t, X(t/ε; y, t; 0)) − S(t, t/ε, y) on the grid.

    Raises:
        InputError: If eps is not positive
    """
    if eps <= 0.0:
        raise InputError("eps must be positive")
    grid = problem.grid
    tau = (t / eps) % grid.theta
    forward = problem.flow.evaluate(tau, grid.coordinates(), t)
    composed = interpolate_values(grid, g.flat, forward)
    corrector = tau_interpolate(corrector_S(problem, source, t, tau_integration), grid, tau)
    return ScalarField(grid, composed - corrector)
