"""Corrector/remainder recursion and the breadth-first expansion build.

All quantities are handled in the pulled-back frame y = X(−τ; x, t; 0), in
which the fast flow disappears and the order-k equation reads

    ∂_τ Û_{k+1} + ∂_t Û_k + Σ_{j≤k} α_j·∇Û_{k−j} = 0,   Û_k = V_k + W_k.

Its τ-average is the transport equation of V_k; what remains integrates to
the next corrector

    W_k = ∫₀^τ Σ_{j<k} (ã_j − α_j)·∇(V_{k−1−j} + W_{k−1−j}) − R̂_{k−1} dσ

with the remainder

    R̂_i = ∂_tW_i − ⟨∂_tW_i⟩ + Σ_{j≤i} ã_j·∇W_{i−j} − ⟨Σ_{j≤i} α_j·∇W_{i−j}⟩,

where ⟨·⟩ is the τ-average. W_0 = R_0 = 0. Composing with X(−τ) gives the
x-frame fields W_k(t, τ, X(−τ; x, t; 0)) and R_k.
"""

import logging
import time

import numpy as np

from src.config.models import ExpansionSettings
from src.engine.averaging import alpha_samples
from src.engine.expansion import TwoScaleProblem
from src.engine.state import AlphaTable, ExpansionState, check_memory
from src.engine.transport import solve_transport
from src.errors import ConfigurationError, InputError
from src.numerics.differentiation import gradient_values
from src.numerics.grid import FloatArray, ScalarField
from src.numerics.quadrature import cumquad_tau, cumquad_tau_spectral, refine_tau

logger = logging.getLogger(__name__)


def generic_alpha_table(problem: TwoScaleProblem, det_guard: float) -> AlphaTable:
    """α tables from the flow Jacobian solves of the generic engine."""

    def table(i: int, t: float, points: FloatArray) -> FloatArray:
        return alpha_samples(i, t, points, problem, det_guard)

    return table


def time_derivative(values: FloatArray, times: FloatArray, m: int) -> FloatArray:
    """∂_t at checkpoint m by second-order differences, one-sided at both ends.

    Args:
        values: Samples on every checkpoint along axis 0
        times: Uniform checkpoint times
        m: Checkpoint index

    Returns:
        The derivative with the shape of values[m]

    Raises:
        ConfigurationError: If fewer than 3 checkpoints are available
    """
    count = values.shape[0]
    if count < 3:
        raise ConfigurationError(
            "∂_t W needs at least 3 checkpoints", key="expansion.checkpoints"
        )
    step = float(times[1] - times[0])
    if m == 0:
        return (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step)
    if m == count - 1:
        return (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * step)
    return (values[m + 1] - values[m - 1]) / (2.0 * step)


class CheckpointContext:
    """Lazily computed inputs of the recursion at one checkpoint.

    α tables, averages and gradients are computed on first use and shared
    between the corrector, remainder and source evaluations of the checkpoint.
    """

    def __init__(self, state: ExpansionState, m: int) -> None:
        self.state = state
        self.m = m
        self._alpha: dict[int, FloatArray] = {}
        self._grad_slow: dict[int, FloatArray] = {}
        self._grad_corrector: dict[int, FloatArray | None] = {}

    def alpha(self, j: int) -> FloatArray:
        """α_j at the τ nodes, shape (tau_points, dims, size)."""
        if j not in self._alpha:
            self._alpha[j] = self.state.alpha(j, self.m)
        return self._alpha[j]

    def tilde(self, j: int) -> FloatArray:
        """ã_j, shape (dims, size)."""
        if j < len(self.state.averaged):
            return self.state.averaged[j][self.m]
        return np.asarray(np.mean(self.alpha(j), axis=0))

    def grad_slow(self, k: int) -> FloatArray:
        """∇V_k, shape (dims, size)."""
        if k not in self._grad_slow:
            self._grad_slow[k] = gradient_values(self.state.grid, self.state.slow_at(k, self.m))
        return self._grad_slow[k]

    def grad_corrector(self, k: int) -> FloatArray | None:
        """∇W_k at the τ nodes, shape (tau_points, dims, size); None when W_k ≡ 0."""
        if k not in self._grad_corrector:
            values = self.state.corrector_at(k, self.m)
            if values is None or not np.any(values):
                self._grad_corrector[k] = None
            else:
                self._grad_corrector[k] = np.moveaxis(
                    gradient_values(self.state.grid, values), 0, 1
                )
        return self._grad_corrector[k]

    def dt_corrector(self, k: int) -> FloatArray | None:
        """∂_tW_k at the τ nodes, shape (tau_points, size); None when W_k ≡ 0."""
        if k == 0:
            return None
        self.state.require(k, corrector=True)
        values = self.state.correctors[k]
        if values is None:
            return None
        return time_derivative(values, self.state.times, self.m)

    def dt_slow(self, k: int) -> FloatArray:
        """∂_tV_k, shape (size,)."""
        self.state.require(k)
        return time_derivative(self.state.slow[k], self.state.times, self.m)


def _dot(vectors: FloatArray, gradients: FloatArray) -> FloatArray:
    """Contract the dims axis of (…, dims, size) arrays."""
    return np.asarray(np.einsum("...dn,...dn->...n", vectors, gradients))


def compute_R(context: CheckpointContext, i: int) -> FloatArray:
    """Remainder R̂_i at one checkpoint and every τ node, shape (tau_points, size).

    Raises:
        SequencingError: If W_1 … W_i are not available
    """
    state = context.state
    remainder = np.zeros((state.grid.tau_points, state.grid.size))
    if i == 0:
        return remainder
    dt_w = context.dt_corrector(i)
    if dt_w is not None:
        remainder += dt_w - np.mean(dt_w, axis=0)
    for j in range(i):
        grad = context.grad_corrector(i - j)
        if grad is None:
            continue
        remainder += _dot(context.tilde(j)[None], grad)
        remainder -= np.mean(_dot(context.alpha(j), grad), axis=0)
    return remainder


def corrector_integrand(context: CheckpointContext, k: int) -> FloatArray:
    """σ-integrand of W_k at every τ node, shape (tau_points, size).

    Raises:
        SequencingError: If V_0 … V_{k−1} or W_{k−1} are missing
    """
    integrand = -compute_R(context, k - 1)
    for j in range(k):
        lower = k - 1 - j
        deviation = context.tilde(j)[None] - context.alpha(j)
        if not np.any(deviation):
            continue
        grad = context.grad_slow(lower)[None]
        grad_w = context.grad_corrector(lower)
        if grad_w is not None:
            grad = grad + grad_w
        integrand += _dot(deviation, grad)
    return integrand


def _antiderivative(integrand: FloatArray, state: ExpansionState) -> FloatArray:
    if state.settings.tau_integration == "trapezoid":
        return cumquad_tau(integrand, state.grid)
    return cumquad_tau_spectral(integrand, state.grid)


def product_aliasing(context: CheckpointContext, k: int) -> FloatArray:
    """Change of the W_k integrand mean when its α·∇W products are sampled twice as finely.

    The remainder keeps its averages from the stored τ nodes, so the change
    is the part of ⟨α_j·∇W_{k−1−j}⟩ the stored nodes alias away.
    """
    grid = context.state.grid
    change = np.zeros(grid.size)
    for j in range(k):
        grad = context.grad_corrector(k - 1 - j)
        if grad is None:
            continue
        alpha = context.alpha(j)
        fine = _dot(refine_tau(alpha, grid), refine_tau(grad, grid))
        change -= np.mean(fine, axis=0) - np.mean(_dot(alpha, grad), axis=0)
    return change


def _closure(
    integrand: FloatArray, corrector: FloatArray, theta: float, aliasing: FloatArray
) -> float:
    full_period = theta * (np.mean(integrand, axis=0) + aliasing)
    scale = 1.0 + float(np.max(np.abs(corrector), initial=0.0))
    return float(np.max(np.abs(full_period), initial=0.0)) / scale


def compute_W(context: CheckpointContext, k: int) -> tuple[FloatArray, float]:
    """Corrector W_k at one checkpoint.

    Args:
        context: Checkpoint inputs
        k: Order, k ≥ 0

    Returns:
        W_k at every τ node, shape (tau_points, size), and its relative
        closure residual max|W_k(θ)| / (1 + max|W_k|), with W_k(θ) from the
        integrand mean on a doubled τ grid (see product_aliasing)

    Raises:
        SequencingError: If lower orders are missing
    """
    grid = context.state.grid
    if k == 0:
        return np.zeros((grid.tau_points, grid.size)), 0.0
    integrand = corrector_integrand(context, k)
    corrector = _antiderivative(integrand, context.state)
    aliasing = product_aliasing(context, k)
    return corrector, _closure(integrand, corrector, grid.theta, aliasing)


def compute_W_reduced(context: CheckpointContext, k: int) -> FloatArray:
    """Corrector W_k for a slow field that is ε-independent and τ-independent.

    Uses W_k = −∫₀^τ (∂_tÛ_{k−1} + α_0·∇Û_{k−1}) dσ with ∂_t taken across
    the stored checkpoints.

    Raises:
        InputError: If the slow field has higher orders or depends on τ
        SequencingError: If lower orders are missing
    """
    state = context.state
    if not state.problem.expansion.is_reduced():
        raise InputError("the reduced corrector needs an ε- and τ-independent slow field")
    grid = state.grid
    if k == 0:
        return np.zeros((grid.tau_points, grid.size))
    lower = k - 1
    dt_u = np.broadcast_to(context.dt_slow(lower), (grid.tau_points, grid.size)).copy()
    dt_w = context.dt_corrector(lower)
    if dt_w is not None:
        dt_u += dt_w
    grad = context.grad_slow(lower)[None]
    grad_w = context.grad_corrector(lower)
    if grad_w is not None:
        grad = grad + grad_w
    integrand = dt_u + _dot(context.alpha(0), grad)
    return -_antiderivative(integrand, state)


def slow_source(context: CheckpointContext, k: int) -> FloatArray:
    """Right-hand side of the V_k transport equation at one checkpoint, shape (size,).

    −⟨∂_tW_k + α_0·∇W_k⟩ − Σ_{i=1}^{k} [ã_i·∇V_{k−i} + ⟨α_i·∇W_{k−i}⟩]
    """
    state = context.state
    source = np.zeros(state.grid.size)
    if k == 0:
        return source
    dt_w = context.dt_corrector(k)
    if dt_w is not None:
        source -= np.mean(dt_w, axis=0)
    grad_w = context.grad_corrector(k)
    if grad_w is not None:
        source -= np.mean(_dot(context.alpha(0), grad_w), axis=0)
    for i in range(1, k + 1):
        source -= _dot(context.tilde(i), context.grad_slow(k - i))
        grad_lower = context.grad_corrector(k - i)
        if grad_lower is not None:
            source -= np.mean(_dot(context.alpha(i), grad_lower), axis=0)
    return source


def _transport_slow(
    state: ExpansionState, initial: ScalarField, source: FloatArray | None, exact: bool
) -> FloatArray:
    settings = state.settings
    fields = solve_transport(
        state.grid,
        state.averaged[0],
        source,
        initial,
        state.times,
        mode=settings.transport_mode,
        substeps=settings.transport_substeps,
        initial_exact=state.problem.initial_exact if exact else None,
    )
    return np.stack([f.flat for f in fields])


def build_expansion(
    problem: TwoScaleProblem,
    settings: ExpansionSettings,
    alpha_table: AlphaTable | None = None,
) -> ExpansionState:
    """Compute V_k and W_k for k ≤ K on uniform checkpoints over [0, T].

    Orders are processed breadth-first: ã_i on every checkpoint, then V_0,
    then for each k the corrector W_k on every checkpoint followed by the
    transport solve for V_k.

    Args:
        problem: Problem to expand
        settings: Engine options
        alpha_table: Optional α tables (defaults to the generic Jacobian solves)

    Returns:
        The frozen expansion state

    Raises:
        ConfigurationError: If the memory estimate exceeds the limit
        DegenerateFlowError: If the flow Jacobian degenerates
        DivergenceError: If a transport solve blows up
    """
    grid = problem.grid
    estimate = check_memory(grid, settings)
    order = settings.order
    started = time.perf_counter()
    times = np.linspace(0.0, problem.horizon, settings.checkpoints + 1)
    state = ExpansionState(
        problem=problem,
        settings=settings,
        alpha_table=alpha_table or generic_alpha_table(problem, settings.det_guard),
        times=times,
    )
    logger.info(
        "Building expansion K=%d on %d nodes, %d τ nodes, %d checkpoints (~%.0f MB)",
        order,
        grid.size,
        grid.tau_points,
        len(times),
        estimate,
    )

    for i in range(order + 1):
        state.averaged.append(
            np.stack([np.mean(state.alpha(i, m), axis=0) for m in range(len(times))])
        )

    if not np.any(problem.initial.flat):
        logger.info("Initial data vanishes; every profile is zero")
        zero_corrector = np.zeros((len(times), grid.tau_points, grid.size))
        state.slow = [np.zeros((len(times), grid.size)) for _ in range(order + 1)]
        state.correctors = [None] + [zero_corrector.copy() for _ in range(order)]
        state.closure = [np.zeros(len(times)) for _ in range(order + 1)]
        state.seconds = time.perf_counter() - started
        return state.freeze()

    state.slow.append(_transport_slow(state, problem.initial, None, exact=True))
    state.correctors.append(None)
    state.closure.append(np.zeros(len(times)))

    for k in range(1, order + 1):
        correctors = np.empty((len(times), grid.tau_points, grid.size))
        closure = np.empty(len(times))
        for m in range(len(times)):
            correctors[m], closure[m] = compute_W(CheckpointContext(state, m), k)
        state.correctors.append(correctors)
        state.closure.append(closure)
        worst = float(np.max(closure))
        if worst > settings.closure_tolerance:
            logger.warning(
                "W_%d closure residual %.3e exceeds tolerance %.1e",
                k,
                worst,
                settings.closure_tolerance,
            )
        sources = np.stack(
            [slow_source(CheckpointContext(state, m), k) for m in range(len(times))]
        )
        state.slow.append(
            _transport_slow(state, ScalarField.zeros(grid), sources, exact=False)
        )
        logger.debug("Order %d done after %.2fs", k, time.perf_counter() - started)

    state.seconds = time.perf_counter() - started
    logger.info("Expansion built in %.2fs", state.seconds)
    return state.freeze()
