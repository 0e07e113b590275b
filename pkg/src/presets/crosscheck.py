"""Preset-form corrector recursion and its cross-checks against the generic engine.

The preset recursion works in the preset variables with the averaged
operators J_i, the closed-form deviations J_i − α_i(σ) and the closed-form α_i:

    W_i = ∫₀^τ Σ_{j<i} (J_j − α_j(σ))·(∇G_{i−1−j} + ∇W_{i−1−j}(σ)) − R_{i−1}(σ) dσ
    R_{i−1} = ∂_tW_{i−1} − ⟨∂_tW_{i−1}⟩ + Σ_{j<i} (J_j·∇W_{i−1−j} − ⟨α_j·∇W_{i−1−j}⟩)
    ∂_tG_k + J_0·∇G_k = −⟨∂_tW_k⟩ − Σ_{i≤k} ⟨α_i·∇W_{k−i}⟩ − Σ_{1≤i≤k} J_i·∇G_{k−i}

Only grid primitives are shared with the engine: gradients, τ antiderivatives
and the transport solver. ∂_t is taken with numpy's second-order gradient.

With ``convective=False`` the J·∇W − ⟨α·∇W⟩ part of R is left out. W_1 does
not change, but from W_2 on the corrector no longer closes over a period.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.config.models import ExpansionSettings
from src.engine.recursion import build_expansion, generic_alpha_table
from src.engine.state import ExpansionState
from src.engine.transport import solve_transport
from src.errors import ConfigurationError
from src.numerics.differentiation import gradient_values
from src.numerics.grid import FloatArray, ScalarField
from src.numerics.quadrature import cumquad_tau, cumquad_tau_spectral
from src.presets.registry import LimitModel

logger = logging.getLogger(__name__)


@dataclass
class PresetProfiles:
    """Profiles of the preset-form recursion.

    Attributes:
        times: Checkpoint times
        slow: G_k on every checkpoint, shape (M + 1, size)
        correctors: W_k on every checkpoint, shape (M + 1, tau_points, size); None for k = 0
        closure: Largest relative |W_k(θ)| per order
    """

    times: FloatArray
    slow: list[FloatArray] = field(default_factory=list)
    correctors: list[FloatArray | None] = field(default_factory=list)
    closure: list[float] = field(default_factory=list)


class _PresetTables:
    """J_i, J_i − α_i and α_i on one checkpoint, evaluated on first use."""

    def __init__(self, model: LimitModel, times: FloatArray) -> None:
        self.model = model
        self.times = times
        self.points = model.problem.grid.coordinates()
        self._cache: dict[tuple[str, int, int], FloatArray] = {}

    def _lookup(self, kind: str, i: int, m: int) -> FloatArray:
        key = (kind, i, m)
        if key not in self._cache:
            t = float(self.times[m])
            if kind == "averaged":
                self._cache[key] = self.model.averaged(i, t, self.points)
            elif kind == "deviation":
                self._cache[key] = self.model.deviation(i, t, self.points)
            else:
                self._cache[key] = self.model.closed_form_alpha(i, t, self.points)
        return self._cache[key]

    def averaged(self, i: int, m: int) -> FloatArray:
        return self._lookup("averaged", i, m)

    def deviation(self, i: int, m: int) -> FloatArray:
        return self._lookup("deviation", i, m)

    def alpha(self, i: int, m: int) -> FloatArray:
        return self._lookup("alpha", i, m)


def _dot(vectors: FloatArray, gradients: FloatArray) -> FloatArray:
    return np.asarray(np.einsum("...dn,...dn->...n", vectors, gradients))


def _corrector_gradient(
    profiles: PresetProfiles, model: LimitModel, n: int, m: int
) -> FloatArray | None:
    values = profiles.correctors[n]
    if values is None:
        return None
    return np.moveaxis(gradient_values(model.problem.grid, values[m]), 0, 1)


def _slow_gradient(profiles: PresetProfiles, model: LimitModel, n: int, m: int) -> FloatArray:
    return gradient_values(model.problem.grid, profiles.slow[n][m])


def _integrand(
    profiles: PresetProfiles,
    tables: _PresetTables,
    dt_lower: FloatArray | None,
    k: int,
    m: int,
    convective: bool,
) -> FloatArray:
    model = tables.model
    grid = model.problem.grid
    integrand = np.zeros((grid.tau_points, grid.size))
    if dt_lower is not None:
        integrand -= dt_lower[m] - np.mean(dt_lower[m], axis=0)
    for j in range(k):
        lower = k - 1 - j
        grad_w = _corrector_gradient(profiles, model, lower, m)
        grad = _slow_gradient(profiles, model, lower, m)[None]
        if grad_w is not None:
            grad = grad + grad_w
        integrand += _dot(tables.deviation(j, m), grad)
        if convective and grad_w is not None:
            integrand -= _dot(tables.averaged(j, m)[None], grad_w)
            integrand += np.mean(_dot(tables.alpha(j, m), grad_w), axis=0)
    return integrand


def _source(
    profiles: PresetProfiles, tables: _PresetTables, dt_w: FloatArray, k: int, m: int
) -> FloatArray:
    model = tables.model
    source = -np.mean(dt_w[m], axis=0)
    for i in range(k + 1):
        grad_w = _corrector_gradient(profiles, model, k - i, m)
        if grad_w is not None:
            source -= np.mean(_dot(tables.alpha(i, m), grad_w), axis=0)
    for i in range(1, k + 1):
        source -= _dot(tables.averaged(i, m), _slow_gradient(profiles, model, k - i, m))
    return np.asarray(source)


def _transport(
    model: LimitModel,
    settings: ExpansionSettings,
    drift: FloatArray,
    source: FloatArray | None,
    times: FloatArray,
) -> FloatArray:
    problem = model.problem
    initial = problem.initial if source is None else ScalarField.zeros(problem.grid)
    fields = solve_transport(
        problem.grid,
        drift,
        source,
        initial,
        times,
        mode=settings.transport_mode,
        substeps=settings.transport_substeps,
        initial_exact=problem.initial_exact if source is None else None,
    )
    return np.stack([f.flat for f in fields])


def preset_recursion(
    model: LimitModel, settings: ExpansionSettings, order: int, *, convective: bool = True
) -> PresetProfiles:
    """Run the preset-form recursion through order `order`.

    Args:
        model: Preset limit model
        settings: Engine options (τ rule, checkpoints and transport options)
        order: Highest order K
        convective: Keep the J·∇W − ⟨α·∇W⟩ part of the remainder

    Returns:
        G_k and W_k for k ≤ order on the engine's checkpoints

    Raises:
        ConfigurationError: If fewer than 3 checkpoints are requested
    """
    grid = model.problem.grid
    times = np.linspace(0.0, model.problem.horizon, settings.checkpoints + 1)
    if len(times) < 3:
        raise ConfigurationError(
            "∂_t W needs at least 3 checkpoints", key="expansion.checkpoints"
        )
    tables = _PresetTables(model, times)
    profiles = PresetProfiles(times=times)
    drift = np.stack([tables.averaged(0, m) for m in range(len(times))])
    profiles.slow.append(_transport(model, settings, drift, None, times))
    profiles.correctors.append(None)
    profiles.closure.append(0.0)

    for k in range(1, order + 1):
        lower = profiles.correctors[k - 1]
        dt_lower = None if lower is None else np.gradient(lower, times, axis=0, edge_order=2)
        correctors = np.empty((len(times), grid.tau_points, grid.size))
        worst = 0.0
        for m in range(len(times)):
            integrand = _integrand(profiles, tables, dt_lower, k, m, convective)
            if settings.tau_integration == "trapezoid":
                correctors[m] = cumquad_tau(integrand, grid)
            else:
                correctors[m] = cumquad_tau_spectral(integrand, grid)
            period = grid.theta * np.mean(integrand, axis=0)
            scale = 1.0 + float(np.max(np.abs(correctors[m])))
            worst = max(worst, float(np.max(np.abs(period))) / scale)
        profiles.correctors.append(correctors)
        profiles.closure.append(worst)
        dt_w = np.gradient(correctors, times, axis=0, edge_order=2)
        sources = np.stack([_source(profiles, tables, dt_w, k, m) for m in range(len(times))])
        profiles.slow.append(_transport(model, settings, drift, sources, times))
        logger.debug("%s preset recursion order %d, closure %.3e", model.name, k, worst)
    return profiles


def specialized_W(model: LimitModel, settings: ExpansionSettings, k: int) -> FloatArray:
    """Preset-form corrector W_k on every checkpoint, shape (M + 1, tau_points, size).

    Args:
        model: Preset limit model
        settings: Engine options
        k: Corrector order, at least 1

    Returns:
        W_k from the preset recursion

    Raises:
        ValueError: If k < 1
    """
    if k < 1:
        raise ValueError("W_0 vanishes by convention")
    values = preset_recursion(model, settings, k).correctors[k]
    assert values is not None
    return values


def _relative(first: FloatArray, second: FloatArray) -> float:
    scale = max(1.0, float(np.max(np.abs(first))), float(np.max(np.abs(second))))
    return float(np.max(np.abs(first - second))) / scale


def corrector_deviation(model: LimitModel, settings: ExpansionSettings, order: int) -> float:
    """Largest relative gap between engine V_k, W_k and preset G_k, W_k for k ≤ order."""
    generic = build_expansion(model.problem, settings.model_copy(update={"order": order}))
    preset = preset_recursion(model, settings, order)
    worst = 0.0
    for k in range(order + 1):
        worst = max(worst, _relative(generic.slow[k], preset.slow[k]))
        first, second = generic.correctors[k], preset.correctors[k]
        if first is not None and second is not None:
            worst = max(worst, _relative(first, second))
    logger.debug("%s corrector deviation through K=%d: %.3e", model.name, order, worst)
    return worst


def operator_deviation(
    model: LimitModel, i: int = 0, t: float = 0.0, det_guard: float = 0.5
) -> float:
    """Largest node-wise gap between the generic ã_i and the preset closed form."""
    grid = model.problem.grid
    points = grid.coordinates()
    generic = np.mean(generic_alpha_table(model.problem, det_guard)(i, t, points), axis=0)
    closed = model.averaged(i, t, points)
    return float(np.max(np.abs(generic - closed)))


def symmetry_defect(state: ExpansionState) -> float:
    """Largest |V_k(t, y) − V_k(t, −y)| over orders and checkpoints.

    Assumes a box symmetric about the origin, so that reversing every axis
    maps each node to its mirror image.
    """
    grid = state.grid
    flip = tuple(slice(None, None, -1) for _ in range(grid.dims))
    worst = 0.0
    for values in state.slow:
        for row in values:
            field_ = row.reshape(grid.shape)
            worst = max(worst, float(np.max(np.abs(field_ - field_[flip]))))
    return worst
