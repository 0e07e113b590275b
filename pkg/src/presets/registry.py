"""Catalog of application presets and their wiring into the generic engine."""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

from src.config.defaults import PRESET_DIMS, Resolution, default_run_config
from src.config.models import RunConfig
from src.engine.expansion import OscillatingExpansion, TwoScaleProblem
from src.engine.state import AlphaTable
from src.errors import ConfigurationError, InputError
from src.flow.flow_map import FlowKind, FlowMap, NumericFlow
from src.flow.integrators import FastField, FastFieldGradient
from src.numerics.grid import FloatArray, ScalarField, TensorGrid
from src.presets import beam, flr, gc
from src.presets.fields import FieldForm, is_odd_field, is_symmetric_initial
from src.presets.gc import LorentzForce

logger = logging.getLogger(__name__)

MAX_ORDER = 4

AveragedOperator = Callable[[int, float, FloatArray], FloatArray]
"""Preset closed form of ã_i: (i, t, points) -> array of shape (dims, P)."""


@dataclass(frozen=True)
class PresetInfo:
    """Catalog entry of a preset.

    Attributes:
        name: Preset identifier used in configuration files
        dims: Phase-space dimension
        theta: Fast period
        description: One-line summary
    """

    name: str
    dims: int
    theta: float
    description: str


PRESETS = {
    "beam": PresetInfo(
        "beam", PRESET_DIMS["beam"], beam.THETA, "axisymmetric beam in (r, v_r), L = (v, -r)"
    ),
    "gc4d": PresetInfo(
        "gc4d",
        PRESET_DIMS["gc4d"],
        gc.THETA,
        "guiding center in (x, y, v_x, v_y), beta = e_z, L = (0, 0, v_y, -v_x)",
    ),
    "flr4d": PresetInfo(
        "flr4d",
        PRESET_DIMS["flr4d"],
        flr.THETA,
        "finite Larmor radius in (x, y, v_x, v_y), L = (v_x, v_y, v_y, -v_x)",
    ),
}


def preset_catalog() -> list[PresetInfo]:
    """Return every preset, in catalog order."""
    return list(PRESETS.values())


@dataclass(frozen=True, eq=False)
class LimitModel:
    """A preset wired into the generic engine.

    Attributes:
        name: Preset identifier
        problem: Generic problem description (grid, flow, coefficients, data)
        closed_form_alpha: α tables from the preset formulas
        averaged: Preset closed form of ã_i
        deviation: Closed-form J_i − α_i tables in the preset variables
        fast_field_gradient: ∇_x L of the fast field
        symmetric: Whether data and fields have the beam symmetry
    """

    name: str
    problem: TwoScaleProblem
    closed_form_alpha: AlphaTable
    averaged: AveragedOperator
    deviation: AlphaTable
    fast_field_gradient: FastFieldGradient | None = None
    symmetric: bool = False

    @property
    def flow(self) -> FlowMap:
        """Closed-form fast flow of the preset."""
        flow = self.problem.flow
        if flow.kind is not FlowKind.ANALYTIC:
            raise TypeError("preset flows are closed-form")
        return flow

    def numeric_flow(self, substeps_per_unit: int = 64) -> NumericFlow:
        """Runge–Kutta flow of the same fast field."""
        return NumericFlow(
            self.problem.grid.dims,
            self.problem.grid.theta,
            self.problem.fast_field,
            self.fast_field_gradient,
            substeps_per_unit,
            horizon=self.problem.horizon,
        )


def _grid(config: RunConfig, theta: float) -> TensorGrid:
    problem = config.problem
    return TensorGrid(
        lower=tuple(problem.lower),
        upper=tuple(problem.upper),
        points=tuple(problem.points),
        tau_points=config.expansion.tau_points,
        theta=theta,
    )


def _initial(form: FieldForm) -> Callable[[FloatArray], FloatArray]:
    def initial(points: FloatArray) -> FloatArray:
        return form.evaluate(0.0, 0.0, points)

    return initial


def _problem(
    config: RunConfig,
    grid: TensorGrid,
    flow: FlowMap,
    fast_field: FastField,
    expansion: OscillatingExpansion,
) -> TwoScaleProblem:
    exact = _initial(config.fields.initial)
    return TwoScaleProblem(
        grid=grid,
        flow=flow,
        fast_field=fast_field,
        expansion=expansion,
        initial=ScalarField.from_function(grid, exact),
        horizon=config.problem.final_time,
        initial_exact=exact,
    )


def _beam_model(config: RunConfig, order: int) -> LimitModel:
    fields = config.fields
    grid = _grid(config, beam.THETA)
    problem = _problem(
        config, grid, beam.beam_flow(), beam.fast_field, beam.beam_expansion(fields.e, order)
    )
    symmetric = is_symmetric_initial(fields.initial) and all(is_odd_field(f) for f in fields.e)
    symmetric = symmetric and all(
        math.isclose(lo, -hi) for lo, hi in zip(grid.lower, grid.upper, strict=True)
    )

    def averaged(i: int, t: float, points: FloatArray) -> FloatArray:
        return beam.averaged_operator(fields.e, i, t, points, grid.tau_points)

    return LimitModel(
        name="beam",
        problem=problem,
        closed_form_alpha=beam.beam_alpha_table(fields.e, grid.tau_nodes()),
        averaged=averaged,
        deviation=beam.beam_deviation_table(fields.e, grid.tau_nodes()),
        fast_field_gradient=beam.fast_field_gradient,
        symmetric=symmetric,
    )


def _forces(config: RunConfig, order: int) -> list[LorentzForce]:
    fields = config.fields
    return [LorentzForce.at_order(fields.e_x, fields.e_y, fields.b_z, i) for i in range(order + 1)]


def _field_line(config: RunConfig) -> gc.FieldLine | None:
    if not config.fields.beta_z:
        return None
    try:
        return gc.FieldLine.from_forms(config.fields.beta_z)
    except InputError as e:
        raise ConfigurationError(str(e), key="fields.beta_z") from e


def _gc_model(config: RunConfig, order: int) -> LimitModel:
    grid = _grid(config, gc.THETA)
    forces = _forces(config, order)
    line = _field_line(config)
    if line is None:
        flow: FlowMap = gc.gc_flow()
        fast_field: FastField = gc.fast_field
    else:
        flow = gc.field_line_flow(line)
        fast_field = line.fast_field
        logger.debug("gc4d field line winds %.6g over one period", line.winding)
    problem = _problem(config, grid, flow, fast_field, gc.gc_expansion(forces, order))

    def averaged(i: int, t: float, points: FloatArray) -> FloatArray:
        return gc.averaged_operator(forces, i, t, points, grid.tau_points, line)

    return LimitModel(
        name="gc4d",
        problem=problem,
        closed_form_alpha=gc.gc_alpha_table(forces, grid.tau_nodes(), line),
        averaged=averaged,
        deviation=gc.gc_deviation_table(forces, grid.tau_nodes(), line),
    )


def _flr_model(config: RunConfig, order: int) -> LimitModel:
    if config.problem.parallel_velocity != 0.0:
        raise ConfigurationError(
            "parallel advection is not part of the 4D reduction",
            key="problem.parallel_velocity",
        )
    grid = _grid(config, flr.THETA)
    forces = _forces(config, order)
    problem = _problem(
        config, grid, flr.flr_flow(), flr.fast_field, flr.flr_expansion(forces, order)
    )

    def averaged(i: int, t: float, points: FloatArray) -> FloatArray:
        return flr.averaged_operator(forces, i, t, points, grid.tau_points)

    return LimitModel(
        name="flr4d",
        problem=problem,
        closed_form_alpha=flr.flr_alpha_table(forces, grid.tau_nodes()),
        averaged=averaged,
        deviation=flr.flr_deviation_table(forces, grid.tau_nodes()),
    )


_BUILDERS = {"beam": _beam_model, "gc4d": _gc_model, "flr4d": _flr_model}


def preset_limit_model(config: RunConfig, order: int | None = None) -> LimitModel:
    """Wire a configured preset into the generic engine's inputs.

    Args:
        config: Validated run configuration
        order: Expansion order K (defaults to the configured one)

    Returns:
        The preset's limit model

    Raises:
        ConfigurationError: If the preset, dimension or order is unsupported
    """
    preset = config.problem.preset
    order = config.expansion.order if order is None else order
    if preset not in _BUILDERS:
        raise ConfigurationError(f"unknown preset {preset!r}", key="problem.preset")
    if not 0 <= order <= MAX_ORDER:
        raise ConfigurationError(f"order {order} outside 0..{MAX_ORDER}", key="expansion.K")
    if len(config.problem.points) != PRESETS[preset].dims:
        raise ConfigurationError(
            f"preset {preset} is {PRESETS[preset].dims}-dimensional", key="problem.points"
        )
    model = _BUILDERS[preset](config, order)
    logger.debug("Built %s limit model, K=%d, %d nodes", preset, order, model.problem.grid.size)
    return model


def default_limit_model(preset: str, resolution: Resolution | None = None) -> LimitModel:
    """Limit model of a preset's shipped configuration.

    Raises:
        ConfigurationError: If the preset is unknown
    """
    if preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {preset!r}", key="problem.preset")
    return preset_limit_model(default_run_config(preset, resolution))
