"""Axisymmetric beam preset in the (r, v_r) phase plane.

The fast field L = (v, −r) rotates the phase plane with period 2π and the
slow field is the self-field A = (0, E(t, τ, r)) with E = Σ ε^i E_i.
"""

import math
from collections.abc import Sequence

import numpy as np

from src.engine.expansion import CoefficientField, OscillatingExpansion
from src.engine.state import AlphaTable
from src.flow.flow_map import LinearFlow
from src.numerics.grid import FloatArray
from src.presets.fields import FieldForm, form_at

THETA = 2.0 * math.pi
DIMS = 2


def rotation(tau: float) -> FloatArray:
    """Φ(τ) with X(τ; (r, v)) = (r cos τ + v sin τ, −r sin τ + v cos τ)."""
    c, s = math.cos(tau), math.sin(tau)
    return np.array([[c, s], [-s, c]])


def beam_flow() -> LinearFlow:
    """Closed-form rotation flow of the beam."""
    return LinearFlow(DIMS, THETA, rotation)


def fast_field(t: float, tau: float, points: FloatArray) -> FloatArray:
    """L(t, τ, (r, v)) = (v, −r)."""
    return np.stack([points[1], -points[0]])


def fast_field_gradient(t: float, tau: float, points: FloatArray) -> FloatArray:
    """∇_x L, constant."""
    matrix = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return np.repeat(matrix[:, :, None], points.shape[1], axis=2)


def _coefficient(form: FieldForm) -> CoefficientField:
    def coefficient(t: float, tau: float, points: FloatArray) -> FloatArray:
        return np.stack([np.zeros(points.shape[1]), form.evaluate(t, tau, points[:1])])

    return coefficient


def beam_expansion(forms: Sequence[FieldForm], order: int) -> OscillatingExpansion:
    """𝒜_i = (0, E_i(t, τ, r)) for i ≤ order."""
    selected = [form_at(list(forms), i) for i in range(order + 1)]
    return OscillatingExpansion(
        dims=DIMS,
        theta=THETA,
        coefficients=tuple(None if f.is_zero else _coefficient(f) for f in selected),
        tau_independent=tuple(f.tau_independent for f in selected),
        t_independent=True,
    )


def beam_alpha(form: FieldForm, t: float, tau: float, points: FloatArray) -> FloatArray:
    """α_i = (−sin τ · E_i(t, τ, X₁), cos τ · E_i(t, τ, X₁)), X₁ = r cos τ + v sin τ."""
    c, s = math.cos(tau), math.sin(tau)
    radial = c * points[0] + s * points[1]
    field = form.evaluate(t, tau, radial[None])
    return np.stack([-s * field, c * field])


def beam_alpha_table(forms: Sequence[FieldForm], tau_nodes: FloatArray) -> AlphaTable:
    """α tables from the closed-form beam formulas."""

    def table(i: int, t: float, points: FloatArray) -> FloatArray:
        form = form_at(list(forms), i)
        if form.is_zero:
            return np.zeros((len(tau_nodes), DIMS, points.shape[1]))
        return np.stack([beam_alpha(form, t, float(tau), points) for tau in tau_nodes])

    return table


def beam_J(
    which: int, form: FieldForm, t: float, r: FloatArray, v: FloatArray, tau_points: int = 64
) -> FloatArray:
    """Averaged beam operators of one field order E_i.

    J₁ = −(1/2π)∫₀^{2π} sin τ · E_i(t, τ, r cos τ + v sin τ) dτ and J₂ the same
    with cos τ and without the sign; both by the periodic trapezoid rule.

    Args:
        which: 1 or 2
        form: Field form of E_i
        t: Slow time
        r: Radial positions
        v: Radial velocities
        tau_points: Quadrature nodes

    Returns:
        J_which at every (r, v)

    Raises:
        ValueError: If which is not 1 or 2
    """
    if which not in (1, 2):
        raise ValueError(f"beam_J has operators 1 and 2, not {which}")
    r = np.asarray(r, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    total = np.zeros(np.broadcast(r, v).shape)
    for j in range(tau_points):
        tau = j * THETA / tau_points
        c, s = math.cos(tau), math.sin(tau)
        radial = np.ravel(c * r + s * v)
        field = form.evaluate(t, tau, radial[None]).reshape(total.shape)
        total += (-s if which == 1 else c) * field
    return total / tau_points


def averaged_operator(
    forms: Sequence[FieldForm], i: int, t: float, points: FloatArray, tau_points: int
) -> FloatArray:
    """(J₁(E_i), J₂(E_i)) at points of shape (2, P)."""
    form = form_at(list(forms), i)
    return np.stack(
        [beam_J(which, form, t, points[0], points[1], tau_points) for which in (1, 2)]
    )


def beam_deviation(
    form: FieldForm, t: float, tau_nodes: FloatArray, points: FloatArray
) -> FloatArray:
    """J − α_i(σ) = (J₁(E_i) + sin σ · E_i(t, σ, X₁), J₂(E_i) − cos σ · E_i(t, σ, X₁)).

    X₁ = r cos σ + v sin σ; J₁ and J₂ use the same σ nodes as quadrature.

    Returns:
        The deviation at every σ node, shape (len(tau_nodes), 2, P)
    """
    count = len(tau_nodes)
    j1 = beam_J(1, form, t, points[0], points[1], count)
    j2 = beam_J(2, form, t, points[0], points[1], count)
    rows = []
    for sigma in tau_nodes:
        c, s = math.cos(sigma), math.sin(sigma)
        field = form.evaluate(t, float(sigma), (c * points[0] + s * points[1])[None])
        rows.append(np.stack([j1 + s * field, j2 - c * field]))
    return np.stack(rows)


def beam_deviation_table(forms: Sequence[FieldForm], tau_nodes: FloatArray) -> AlphaTable:
    """J − α tables of the beam, zero for vanishing field orders."""

    def table(i: int, t: float, points: FloatArray) -> FloatArray:
        form = form_at(list(forms), i)
        if form.is_zero:
            return np.zeros((len(tau_nodes), DIMS, points.shape[1]))
        return beam_deviation(form, t, tau_nodes, points)

    return table
