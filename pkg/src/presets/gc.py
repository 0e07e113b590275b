"""Guiding-center preset, reduced to the (x, y, v_x, v_y) phase space.

The strong magnetic field points along β = e_z, so the fast field
L = (0, 0, v_y, −v_x) gyrates the velocity with period 2π. The slow field is
𝒜_0 = (v, ℒ_0) and 𝒜_i = (0, ℒ_i) for i ≥ 1, where the Lorentz force is
ℒ_i(t, τ, x, v) = E_i(t, τ, x) + v × B_i(t, τ, x) e_z.

The general rotation ℛ = exp(𝔅̃) with 𝔅̃v = v × β̃ and ∂_τβ̃ = β is
available in three dimensions for the averaged operators. In the 4D reduction
β = β_z(τ) e_z may vary with τ (a FieldLine); ℛ(τ) is then the plane rotation
by β̃_z(τ), which stays θ-periodic when β̃_z(θ) is a multiple of 2π.
"""

import functools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.linalg import expm

from src.engine.expansion import CoefficientField, OscillatingExpansion
from src.engine.state import AlphaTable
from src.errors import InputError
from src.flow.flow_map import AnalyticFlow, LinearFlow
from src.numerics.grid import FloatArray
from src.presets.fields import FieldForm, ZeroForm, form_at

THETA = 2.0 * math.pi
DIMS = 4
E_Z = np.array([0.0, 0.0, 1.0])

LorentzField3D = Callable[[float, FloatArray, FloatArray], FloatArray]
"""ℒ(τ, x, v) for 3D positions and velocities of shape (3, P)."""

BetaField = Callable[[float], FloatArray]
"""β(τ) as a 3-vector."""


@dataclass(frozen=True)
class LorentzForce:
    """Lorentz force ℒ_i = (E_x + v_y B_z, E_y − v_x B_z) of one expansion order.

    Attributes:
        e_x: In-plane electric field, first component
        e_y: In-plane electric field, second component
        b_z: Out-of-plane magnetic perturbation
    """

    e_x: FieldForm
    e_y: FieldForm
    b_z: FieldForm

    @classmethod
    def at_order(
        cls,
        e_x: Sequence[FieldForm],
        e_y: Sequence[FieldForm],
        b_z: Sequence[FieldForm],
        order: int,
    ) -> "LorentzForce":
        """Collect the forms of one expansion order, zero beyond the lists."""
        return cls(
            form_at(list(e_x), order), form_at(list(e_y), order), form_at(list(b_z), order)
        )

    @property
    def is_zero(self) -> bool:
        return self.e_x.is_zero and self.e_y.is_zero and self.b_z.is_zero

    @property
    def tau_independent(self) -> bool:
        return self.e_x.tau_independent and self.e_y.tau_independent and self.b_z.tau_independent

    def evaluate(self, t: float, tau: float, x: FloatArray, v: FloatArray) -> FloatArray:
        """ℒ at positions x and velocities v, both of shape (2, P)."""
        b_z = self.b_z.evaluate(t, tau, x)
        return np.stack(
            [
                self.e_x.evaluate(t, tau, x) + v[1] * b_z,
                self.e_y.evaluate(t, tau, x) - v[0] * b_z,
            ]
        )


def cross_matrix(b: FloatArray) -> FloatArray:
    """Matrix 𝔅 with 𝔅v = v × b."""
    return np.array([[0.0, b[2], -b[1]], [-b[2], 0.0, b[0]], [b[1], -b[0], 0.0]])


def beta_tilde(beta: BetaField, tau: float) -> FloatArray:
    """β̃(τ) = ∫₀^τ β(σ) dσ by adaptive quadrature, so β̃(0) = 0."""
    if tau == 0.0:
        return np.zeros(3)
    value, _ = quad_vec(
        lambda s: np.asarray(beta(float(s)), dtype=np.float64),
        0.0,
        tau,
        epsabs=1e-13,
        epsrel=1e-12,
    )
    return np.asarray(value, dtype=np.float64)


def rotation_from_beta(beta_tilde_value: FloatArray) -> FloatArray:
    """ℛ = exp(𝔅̃) with 𝔅̃v = v × β̃."""
    return np.asarray(expm(cross_matrix(np.asarray(beta_tilde_value, dtype=np.float64))))


def rotation(tau: float) -> FloatArray:
    """Velocity rotation ℛ(τ) of the 4D reduction, β = e_z."""
    c, s = math.cos(tau), math.sin(tau)
    return np.array([[c, s], [-s, c]])


def _flow_matrix(tau: float) -> FloatArray:
    matrix = np.eye(DIMS)
    matrix[2:, 2:] = rotation(tau)
    return matrix


def gc_flow() -> LinearFlow:
    """X(τ; (x, v)) = (x, ℛ(τ)v)."""
    return LinearFlow(DIMS, THETA, _flow_matrix)


def fast_field(t: float, tau: float, points: FloatArray) -> FloatArray:
    """L(t, τ, (x, v)) = (0, 0, v_y, −v_x)."""
    zeros = np.zeros(points.shape[1])
    return np.stack([zeros, zeros, points[3], -points[2]])


PLANE_ORIGIN = np.zeros((2, 1))
WINDING_TOLERANCE = 1e-8


class FieldLine:
    """Strong field β(τ) = β_z(τ) e_z along the fixed direction e_z.

    The phase β̃_z(τ) = ∫₀^τ β_z is extended past one period by
    β̃_z(τ + θ) = β̃_z(τ) + β̃_z(θ).

    Attributes:
        strength: β_z as a function of τ
        winding: β̃_z(θ), a multiple of 2π

    Raises:
        InputError: If β̃_z(θ) is not a multiple of 2π, so ℛ is not θ-periodic
    """

    def __init__(self, strength: Callable[[float], float]) -> None:
        self.strength = strength
        self._phase = functools.lru_cache(maxsize=4096)(self._integral)
        self.winding = self._integral(THETA)
        turns = self.winding / (2.0 * math.pi)
        if abs(turns - round(turns)) > WINDING_TOLERANCE * max(1.0, abs(turns)):
            raise InputError(f"∫β_z over one period is {self.winding:.6g}, not a multiple of 2π")

    @classmethod
    def from_forms(cls, forms: Sequence[FieldForm]) -> "FieldLine":
        """Sum catalog forms evaluated at t = 0 and the origin of the plane."""
        frozen = tuple(forms)

        def strength(tau: float) -> float:
            return float(sum(form.evaluate(0.0, tau, PLANE_ORIGIN)[0] for form in frozen))

        return cls(strength)

    def _integral(self, tau: float) -> float:
        value, _ = quad(self.strength, 0.0, tau, epsabs=1e-13, epsrel=1e-12, limit=200)
        return float(value)

    def phase(self, tau: float) -> float:
        """β̃_z(τ)."""
        turns, rest = divmod(float(tau), THETA)
        return turns * self.winding + self._phase(rest)

    def beta(self, tau: float) -> FloatArray:
        """β(τ) as a 3-vector."""
        return self.strength(float(tau)) * E_Z

    def rotation(self, tau: float) -> FloatArray:
        """Plane block of ℛ(τ) = exp(𝔅̃(τ))."""
        return rotation(self.phase(tau))

    def fast_field(self, t: float, tau: float, points: FloatArray) -> FloatArray:
        """L(t, τ, (x, v)) = β_z(τ)·(0, 0, v_y, −v_x)."""
        return self.strength(float(tau)) * fast_field(t, tau, points)


def field_line_flow(line: FieldLine) -> AnalyticFlow:
    """X(τ; (x, v); σ) = (x, ℛ(τ)ℛ(σ)⁻¹v) for a τ-dependent β = β_z(τ) e_z."""

    def matrix(tau: float, sigma: float) -> FloatArray:
        full = np.eye(DIMS)
        full[2:, 2:] = rotation(line.phase(tau) - line.phase(sigma))
        return full

    def map_function(tau: float, points: FloatArray, t: float, sigma: float) -> FloatArray:
        return matrix(tau, sigma) @ points

    def jacobian_function(tau: float, points: FloatArray, t: float, sigma: float) -> FloatArray:
        return np.repeat(matrix(tau, sigma)[:, :, None], points.shape[1], axis=2)

    return AnalyticFlow(DIMS, THETA, map_function, jacobian_function)


def _coefficient(force: LorentzForce, order: int) -> CoefficientField:
    def coefficient(t: float, tau: float, points: FloatArray) -> FloatArray:
        lorentz = force.evaluate(t, tau, points[:2], points[2:])
        if order == 0:
            return np.concatenate([points[2:], lorentz])
        return np.concatenate([np.zeros((2, points.shape[1])), lorentz])

    return coefficient


def gc_expansion(forces: Sequence[LorentzForce], order: int) -> OscillatingExpansion:
    """𝒜_0 = (v, ℒ_0), 𝒜_i = (0, ℒ_i) for 1 ≤ i ≤ order."""
    coefficients: list[CoefficientField | None] = []
    flat: list[bool] = []
    for i in range(order + 1):
        force = forces[i] if i < len(forces) else LorentzForce(ZeroForm(), ZeroForm(), ZeroForm())
        coefficients.append(None if i > 0 and force.is_zero else _coefficient(force, i))
        flat.append(force.tau_independent)
    return OscillatingExpansion(
        dims=DIMS,
        theta=THETA,
        coefficients=tuple(coefficients),
        tau_independent=tuple(flat),
        t_independent=True,
    )


def _turn(line: FieldLine | None) -> Callable[[float], FloatArray]:
    return rotation if line is None else line.rotation


def gc_alpha(
    force: LorentzForce,
    i: int,
    t: float,
    tau: float,
    points: FloatArray,
    line: FieldLine | None = None,
) -> FloatArray:
    """α_0 = (ℛv, ℛ⁻¹ℒ_0(x, ℛv)) and α_i = (0, ℛ⁻¹ℒ_i(x, ℛv))."""
    matrix = _turn(line)(tau)
    velocity = matrix @ points[2:]
    lorentz = matrix.T @ force.evaluate(t, tau, points[:2], velocity)
    drift = velocity if i == 0 else np.zeros_like(velocity)
    return np.concatenate([drift, lorentz])


def gc_alpha_table(
    forces: Sequence[LorentzForce], tau_nodes: FloatArray, line: FieldLine | None = None
) -> AlphaTable:
    """α tables from the closed-form guiding-center formulas."""

    def table(i: int, t: float, points: FloatArray) -> FloatArray:
        if i >= len(forces) or (i > 0 and forces[i].is_zero):
            return np.zeros((len(tau_nodes), DIMS, points.shape[1]))
        return np.stack(
            [gc_alpha(forces[i], i, t, float(tau), points, line) for tau in tau_nodes]
        )

    return table


def gc_J(
    which: int,
    x: FloatArray | None = None,
    v: FloatArray | None = None,
    lorentz: LorentzField3D | None = None,
    tau_points: int = 64,
    beta: FloatArray | BetaField = E_Z,
) -> FloatArray:
    """Averaged guiding-center operators for a field β independent of t and x.

    - 𝒥₁ = (1/θ)∫₀^θ ℛ dτ, a 3×3 matrix
    - 𝒥₂(ℒ_0) = (1/θ)∫₀^θ ℛ⁻¹ ℒ_0(τ, x, ℛv) dτ
    - 𝒥₃(ℒ_j) = (1/θ)∫₀^θ ℛ⁻¹ ℒ_j(τ, x, ℛv) dτ

    The ∂_tℛ and ∇_xℛ contributions to 𝒥₂ vanish for such β, so 𝒥₂ and 𝒥₃
    share one formula. Integrals use the periodic trapezoid rule.

    Args:
        which: 1, 2 or 3
        x: Positions of shape (3, P) (operators 2 and 3)
        v: Velocities of shape (3, P) (operators 2 and 3)
        lorentz: ℒ(τ, x, v) (operators 2 and 3)
        tau_points: Quadrature nodes
        beta: Constant field vector, or β(τ) when it varies with τ

    Returns:
        The 3×3 matrix 𝒥₁, or 𝒥₂/𝒥₃ of shape (3, P)

    Raises:
        ValueError: If which is unknown or inputs are missing
    """
    field = beta if callable(beta) else (lambda s: np.asarray(beta, dtype=np.float64))
    rotations = [
        rotation_from_beta(beta_tilde(field, j * THETA / tau_points)) for j in range(tau_points)
    ]
    if which == 1:
        return np.asarray(np.mean(rotations, axis=0))
    if which not in (2, 3):
        raise ValueError(f"gc_J has operators 1, 2 and 3, not {which}")
    if x is None or v is None or lorentz is None:
        raise ValueError("operators 2 and 3 need positions, velocities and a Lorentz force")
    total = np.zeros_like(np.asarray(v, dtype=np.float64))
    for j, matrix in enumerate(rotations):
        tau = j * THETA / tau_points
        total += matrix.T @ lorentz(tau, x, matrix @ v)
    return total / tau_points


def _beta(line: FieldLine | None) -> FloatArray | BetaField:
    return E_Z if line is None else line.beta


def averaged_force(
    force: LorentzForce,
    i: int,
    t: float,
    points: FloatArray,
    tau_points: int,
    line: FieldLine | None = None,
) -> FloatArray:
    """4D restriction of (𝒥₁v, 𝒥₂(ℒ_0)) for i = 0 and (0, 𝒥₃(ℒ_i)) for i ≥ 1."""
    count = points.shape[1]
    x3 = np.vstack([points[:2], np.zeros(count)])
    v3 = np.vstack([points[2:], np.zeros(count)])

    def lorentz(tau: float, x: FloatArray, v: FloatArray) -> FloatArray:
        return np.vstack([force.evaluate(t, tau, x[:2], v[:2]), np.zeros(x.shape[1])])

    which = 2 if i == 0 else 3
    velocity_part = gc_J(which, x3, v3, lorentz, tau_points, _beta(line))[:2]
    if i == 0:
        position_part = (gc_J(1, tau_points=tau_points, beta=_beta(line)) @ v3)[:2]
    else:
        position_part = np.zeros((2, count))
    return np.concatenate([position_part, velocity_part])


def averaged_operator(
    forces: Sequence[LorentzForce],
    i: int,
    t: float,
    points: FloatArray,
    tau_points: int,
    line: FieldLine | None = None,
) -> FloatArray:
    """averaged_force of order i, zero past the configured orders."""
    if i >= len(forces):
        return np.zeros((DIMS, points.shape[1]))
    return averaged_force(forces[i], i, t, points, tau_points, line)


def gc_deviation(
    force: LorentzForce,
    i: int,
    t: float,
    tau_nodes: FloatArray,
    points: FloatArray,
    line: FieldLine | None = None,
) -> FloatArray:
    """J − α_i(σ) of the guiding-center preset.

    - i = 0: ((𝒥₁ − ℛ(σ))v, 𝒥₂(ℒ_0) − ℛ(σ)⁻¹ℒ_0(x, ℛ(σ)v))
    - i ≥ 1: (0, 𝒥₃(ℒ_i) − ℛ(σ)⁻¹ℒ_i(x, ℛ(σ)v))

    Returns:
        The deviation at every σ node, shape (len(tau_nodes), 4, P)
    """
    count = len(tau_nodes)
    turn = _turn(line)
    averaged = averaged_force(force, i, t, points, count, line)
    mean_rotation = gc_J(1, tau_points=count, beta=_beta(line))[:2, :2]
    rows = []
    for sigma in tau_nodes:
        matrix = turn(float(sigma))
        lorentz = matrix.T @ force.evaluate(t, float(sigma), points[:2], matrix @ points[2:])
        if i == 0:
            position = (mean_rotation - matrix) @ points[2:]
        else:
            position = np.zeros((2, points.shape[1]))
        rows.append(np.concatenate([position, averaged[2:] - lorentz]))
    return np.stack(rows)


def gc_deviation_table(
    forces: Sequence[LorentzForce], tau_nodes: FloatArray, line: FieldLine | None = None
) -> AlphaTable:
    """J − α tables of the guiding-center preset."""

    def table(i: int, t: float, points: FloatArray) -> FloatArray:
        if i >= len(forces) or (i > 0 and forces[i].is_zero):
            return np.zeros((len(tau_nodes), DIMS, points.shape[1]))
        return gc_deviation(forces[i], i, t, tau_nodes, points, line)

    return table
