"""Finite Larmor radius preset in the (x_⊥, v_⊥) phase space.

The fast field L = (v_x, v_y, v_y, −v_x) moves particles along full Larmor
circles: X(τ; (x, v)) = (x + ℛ₁(τ)v, ℛ₂(τ)v). The slow field acts on the
velocity only, 𝒜_i = (0, 0, ℒ_i) with the Lorentz force of the
guiding-center preset. Parallel advection is not part of the reduction.
"""

import math
from collections.abc import Sequence

import numpy as np

from src.engine.expansion import CoefficientField, OscillatingExpansion
from src.engine.state import AlphaTable
from src.flow.flow_map import LinearFlow
from src.numerics.grid import FloatArray
from src.presets.gc import LorentzForce

THETA = 2.0 * math.pi
DIMS = 4


def larmor_shift(tau: float) -> FloatArray:
    """ℛ₁(τ) = ∫₀^τ ℛ₂(σ) dσ = [[sin τ, 1 − cos τ], [cos τ − 1, sin τ]]."""
    c, s = math.cos(tau), math.sin(tau)
    return np.array([[s, 1.0 - c], [c - 1.0, s]])


def gyration(tau: float) -> FloatArray:
    """ℛ₂(τ) = [[cos τ, sin τ], [−sin τ, cos τ]]."""
    c, s = math.cos(tau), math.sin(tau)
    return np.array([[c, s], [-s, c]])


def _flow_matrix(tau: float) -> FloatArray:
    matrix = np.eye(DIMS)
    matrix[:2, 2:] = larmor_shift(tau)
    matrix[2:, 2:] = gyration(tau)
    return matrix


def flr_flow() -> LinearFlow:
    """Closed-form Larmor-circle flow."""
    return LinearFlow(DIMS, THETA, _flow_matrix)


def fast_field(t: float, tau: float, points: FloatArray) -> FloatArray:
    """L(t, τ, (x, v)) = (v_x, v_y, v_y, −v_x)."""
    return np.stack([points[2], points[3], points[3], -points[2]])


def _coefficient(force: LorentzForce) -> CoefficientField:
    def coefficient(t: float, tau: float, points: FloatArray) -> FloatArray:
        lorentz = force.evaluate(t, tau, points[:2], points[2:])
        return np.concatenate([np.zeros((2, points.shape[1])), lorentz])

    return coefficient


def flr_expansion(forces: Sequence[LorentzForce], order: int) -> OscillatingExpansion:
    """𝒜_i = (0, 0, ℒ_i) for i ≤ order."""
    selected = [forces[i] for i in range(min(order + 1, len(forces)))]
    return OscillatingExpansion(
        dims=DIMS,
        theta=THETA,
        coefficients=tuple(None if f.is_zero else _coefficient(f) for f in selected),
        tau_independent=tuple(f.tau_independent for f in selected),
        t_independent=True,
    )


def _lorentz_on_circle(
    force: LorentzForce, t: float, tau: float, points: FloatArray
) -> FloatArray:
    x = points[:2] + larmor_shift(tau) @ points[2:]
    v = gyration(tau) @ points[2:]
    return force.evaluate(t, tau, x, v)


def flr_alpha(force: LorentzForce, t: float, tau: float, points: FloatArray) -> FloatArray:
    """α_i = (ℛ₁(−τ)ℒ_i, ℛ₂(−τ)ℒ_i) with ℒ_i evaluated at (x + ℛ₁(τ)v, ℛ₂(τ)v)."""
    lorentz = _lorentz_on_circle(force, t, tau, points)
    return np.concatenate([larmor_shift(-tau) @ lorentz, gyration(-tau) @ lorentz])


def flr_alpha_table(forces: Sequence[LorentzForce], tau_nodes: FloatArray) -> AlphaTable:
    """α tables from the closed-form FLR formulas."""

    def table(i: int, t: float, points: FloatArray) -> FloatArray:
        if i >= len(forces) or forces[i].is_zero:
            return np.zeros((len(tau_nodes), DIMS, points.shape[1]))
        return np.stack([flr_alpha(forces[i], t, float(tau), points) for tau in tau_nodes])

    return table


def flr_J(
    which: int, force: LorentzForce, t: float, points: FloatArray, tau_points: int = 64
) -> FloatArray:
    """𝒥_which(ℒ_i) = (1/2π)∫₀^{2π} ℛ_which(−τ) ℒ_i(t, τ, x + ℛ₁(τ)v, ℛ₂(τ)v) dτ.

    Args:
        which: 1 (position part) or 2 (velocity part)
        force: Lorentz force of the order i
        t: Slow time
        points: Phase-space points (x, v) of shape (4, P)
        tau_points: Quadrature nodes

    Returns:
        The operator at every point, shape (2, P)

    Raises:
        ValueError: If which is not 1 or 2
    """
    if which not in (1, 2):
        raise ValueError(f"flr_J has operators 1 and 2, not {which}")
    matrix = larmor_shift if which == 1 else gyration
    total = np.zeros((2, points.shape[1]))
    if force.is_zero:
        return total
    for j in range(tau_points):
        tau = j * THETA / tau_points
        total += matrix(-tau) @ _lorentz_on_circle(force, t, tau, points)
    return total / tau_points


def averaged_operator(
    forces: Sequence[LorentzForce], i: int, t: float, points: FloatArray, tau_points: int
) -> FloatArray:
    """(𝒥₁(ℒ_i), 𝒥₂(ℒ_i)) at points of shape (4, P)."""
    if i >= len(forces):
        return np.zeros((DIMS, points.shape[1]))
    return np.concatenate(
        [flr_J(which, forces[i], t, points, tau_points) for which in (1, 2)]
    )


def flr_deviation(
    force: LorentzForce, t: float, tau_nodes: FloatArray, points: FloatArray
) -> FloatArray:
    """(𝒥₁(ℒ_i) − ℛ₁(−σ)ℒ_i, 𝒥₂(ℒ_i) − ℛ₂(−σ)ℒ_i), ℒ_i at (x + ℛ₁(σ)v, ℛ₂(σ)v).

    Returns:
        The deviation at every σ node, shape (len(tau_nodes), 4, P)
    """
    count = len(tau_nodes)
    j1 = flr_J(1, force, t, points, count)
    j2 = flr_J(2, force, t, points, count)
    rows = []
    for sigma in tau_nodes:
        lorentz = _lorentz_on_circle(force, t, float(sigma), points)
        rows.append(
            np.concatenate(
                [j1 - larmor_shift(-sigma) @ lorentz, j2 - gyration(-sigma) @ lorentz]
            )
        )
    return np.stack(rows)


def flr_deviation_table(forces: Sequence[LorentzForce], tau_nodes: FloatArray) -> AlphaTable:
    """J − α tables of the FLR preset."""

    def table(i: int, t: float, points: FloatArray) -> FloatArray:
        if i >= len(forces) or forces[i].is_zero:
            return np.zeros((len(tau_nodes), DIMS, points.shape[1]))
        return flr_deviation(forces[i], t, tau_nodes, points)

    return table
