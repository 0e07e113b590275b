"""Periodicity, volume and inverse diagnostics of characteristic flows.

This module provides the residual checks the engine and the invariant suite
run on a flow before trusting it: θ-closure, unit Jacobian determinant,
the inverse property and agreement between two evaluations of one flow.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.errors import ConfigurationError
from src.flow.flow_map import FlowMap
from src.numerics.grid import FloatArray, TensorGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FlowSample:
    """Sample set on which flow diagnostics are evaluated.

    Attributes:
        points: Phase-space points of shape (dims, P)
        times: Slow times t
        taus: Fast times τ
    """

    points: FloatArray
    times: tuple[float, ...]
    taus: tuple[float, ...]


def sample_flow_points(
    grid: TensorGrid,
    count: int = 100,
    times: tuple[float, ...] = (0.0,),
    taus: int = 8,
    seed: int = 0,
    shrink: float = 0.8,
) -> FlowSample:
    """Draw a reproducible sample of points inside the central part of the grid box.

    Args:
        grid: Grid whose box is sampled
        count: Number of points
        times: Slow times to check
        taus: Number of evenly spaced fast times in [0, θ]
        seed: Seed of the random generator
        shrink: Fraction of each axis range that is sampled

    Returns:
        The sample set
    """
    rng = np.random.default_rng(seed)
    lower = np.asarray(grid.lower)
    upper = np.asarray(grid.upper)
    center = 0.5 * (lower + upper)
    half = 0.5 * shrink * (upper - lower)
    points = center[:, None] + half[:, None] * rng.uniform(-1.0, 1.0, size=(grid.dims, count))
    tau_values = tuple(float(v) for v in np.linspace(0.0, grid.theta, taus))
    return FlowSample(points=points, times=times, taus=tau_values)


def check_periodicity(flow: FlowMap, sample: FlowSample) -> float:
    """Return max over the sample of ‖X(θ; x, t; 0) − x‖."""
    residual = 0.0
    for t in sample.times:
        closed = flow.evaluate(flow.theta, sample.points, t, 0.0)
        residual = max(residual, float(np.max(np.linalg.norm(closed - sample.points, axis=0))))
    return residual


def check_volume(flow: FlowMap, sample: FlowSample) -> float:
    """Return max over the sample of |det ∇_x X − 1|."""
    residual = 0.0
    for t in sample.times:
        for tau in sample.taus:
            jac = flow.jacobian(tau, sample.points, t, 0.0)
            det = np.linalg.det(np.moveaxis(jac, -1, 0))
            residual = max(residual, float(np.max(np.abs(det - 1.0))))
    return residual


def check_inverse(flow: FlowMap, sample: FlowSample) -> float:
    """Return max over the sample of ‖X(0; X(τ; x, t; 0), t; τ) − x‖."""
    residual = 0.0
    for t in sample.times:
        for tau in sample.taus:
            forward = flow.evaluate(tau, sample.points, t, 0.0)
            back = flow.evaluate(0.0, forward, t, tau)
            residual = max(residual, float(np.max(np.linalg.norm(back - sample.points, axis=0))))
    return residual


def check_group(flow: FlowMap, sample: FlowSample) -> float:
    """Return max of ‖X(τ₂; X(τ₁; x, t; σ), t; τ₁) − X(τ₂; x, t; σ)‖ over sampled τ pairs."""
    residual = 0.0
    taus = sample.taus
    for t in sample.times:
        for tau_1, tau_2 in zip(taus, taus[::-1], strict=True):
            direct = flow.evaluate(tau_2, sample.points, t, 0.0)
            composed = flow.evaluate(tau_2, flow.evaluate(tau_1, sample.points, t, 0.0), t, tau_1)
            residual = max(residual, float(np.max(np.linalg.norm(composed - direct, axis=0))))
    return residual


def compare_flows(first: FlowMap, second: FlowMap, sample: FlowSample) -> float:
    """Return the largest deviation between two flows over τ ∈ [0, θ]."""
    residual = 0.0
    for t in sample.times:
        for tau in sample.taus:
            a = first.evaluate(tau, sample.points, t, 0.0)
            b = second.evaluate(tau, sample.points, t, 0.0)
            residual = max(residual, float(np.max(np.linalg.norm(a - b, axis=0))))
    return residual


def require_periodic(flow: FlowMap, sample: FlowSample, tolerance: float) -> float:
    """Check the θ-closure of a flow and refuse flows that do not close.

    Returns:
        The closure residual

    Raises:
        ConfigurationError: If the residual exceeds the tolerance
    """
    residual = check_periodicity(flow, sample)
    logger.debug("Flow closure residual %.3e (tolerance %.1e)", residual, tolerance)
    if residual > tolerance:
        raise ConfigurationError(
            f"fast flow is not {flow.theta:.6g}-periodic: closure residual {residual:.3e} "
            f"exceeds {tolerance:.1e}"
        )
    return residual
