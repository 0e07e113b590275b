"""Reconstruction of the profiles U_k and assembly of the ε-expansion."""

import numpy as np

from src.engine.recursion import CheckpointContext, compute_R
from src.engine.state import ExpansionState
from src.engine.transport import bracket
from src.errors import InputError, SequencingError
from src.numerics.grid import FloatArray, ScalarField
from src.numerics.interpolation import interpolate_values
from src.numerics.quadrature import tau_interpolate


def slow_values(state: ExpansionState, k: int, t: float) -> FloatArray:
    """V_k(t) at the nodes, linear in t between checkpoints."""
    state.require(k)
    m, w = bracket(state.times, t)
    values = state.slow[k]
    if w == 0.0:
        return values[m]
    return np.asarray((1.0 - w) * values[m] + w * values[m + 1])


def corrector_values(state: ExpansionState, k: int, t: float, tau: float) -> FloatArray | None:
    """W_k(t, τ) at the nodes of the pulled-back frame; None when W_k ≡ 0."""
    if k == 0:
        return None
    state.require(k, corrector=True)
    stored = state.correctors[k]
    if stored is None:
        return None
    m, w = bracket(state.times, t)
    lower = tau_interpolate(stored[m], state.grid, tau)
    if w == 0.0:
        return lower
    upper = tau_interpolate(stored[m + 1], state.grid, tau)
    return np.asarray((1.0 - w) * lower + w * upper)


def pulled_back_profile(state: ExpansionState, k: int, t: float, tau: float) -> FloatArray:
    """Û_k(t, τ, y) = V_k(t, y) + W_k(t, τ, y) at the nodes."""
    values = slow_values(state, k, t)
    corrector = corrector_values(state, k, t, tau)
    if corrector is None:
        return np.array(values)
    return np.asarray(values + corrector)


def reconstruct_U(
    state: ExpansionState, k: int, t: float, tau: float, points: FloatArray
) -> FloatArray:
    """Evaluate U_k(t, τ, x) = V_k(t, X(−τ)) + W_k(t, τ, X(−τ)) at points of shape (dims, P).

    Raises:
        SequencingError: If order k has not been computed
    """
    back = state.problem.flow.evaluate(-tau, points, t)
    return interpolate_values(state.grid, pulled_back_profile(state, k, t, tau), back)


def partial_sums(state: ExpansionState, eps: float, t: float, order: int) -> list[ScalarField]:
    """Return Σ_{k≤K'} ε^k U_k(t, (t/ε) mod θ, ·) on the grid for every K' ≤ order.

    Raises:
        InputError: If eps is not positive
        SequencingError: If order exceeds the computed orders
    """
    if eps <= 0.0:
        raise InputError("eps must be positive")
    if order > state.order:
        raise SequencingError(f"order {order} requested but the state holds {state.order}")
    grid = state.grid
    tau = (t / eps) % grid.theta
    nodes = grid.coordinates()
    back = state.problem.flow.evaluate(-tau, nodes, t)
    total = np.zeros(grid.size)
    sums: list[ScalarField] = []
    for k in range(order + 1):
        profile = pulled_back_profile(state, k, t, tau)
        total = total + eps**k * interpolate_values(grid, profile, back)
        sums.append(ScalarField(grid, total))
    return sums


def assemble(state: ExpansionState, eps: float, order: int, t: float) -> ScalarField:
    """Return Σ_{k≤K} ε^k U_k(t, (t/ε) mod θ, ·) on the grid.

    Raises:
        InputError: If eps is not positive
        SequencingError: If order exceeds the computed orders
    """
    return partial_sums(state, eps, t, order)[-1]


def residual_Uk(state: ExpansionState, k: int, margin: int = 2) -> float:
    """Max-norm of the discrete residual of the U_k equation.

    In the pulled-back frame the equation reads
    ∂_tÛ_k + Σ_{i≤k} ã_i·∇Û_{k−i} − R̂_k = 0; it is sampled on every
    checkpoint, every τ node and every node at least `margin` nodes from the
    boundary.

    Raises:
        SequencingError: If order k has not been computed
        ConfigurationError: If fewer than 3 checkpoints exist
    """
    state.require(k)
    mask = state.grid.interior_mask(margin)
    worst = 0.0
    for m in range(state.checkpoints):
        context = CheckpointContext(state, m)
        residual = -compute_R(context, k)
        residual += context.dt_slow(k)[None]
        dt_w = context.dt_corrector(k)
        if dt_w is not None:
            residual += dt_w
        for i in range(k + 1):
            lower = k - i
            tilde = context.tilde(i)
            residual += np.einsum("dn,dn->n", tilde, context.grad_slow(lower))[None]
            grad_w = context.grad_corrector(lower)
            if grad_w is not None:
                residual += np.einsum("dn,sdn->sn", tilde, grad_w)
        worst = max(worst, float(np.max(np.abs(residual[:, mask]), initial=0.0)))
    return worst
