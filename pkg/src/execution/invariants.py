"""Invariant suite aggregating the checks of every layer into one ledger.

Every check is guarded: an exception turns into a failed entry carrying the
error message, so the suite always returns a complete ledger.
"""

import logging
from collections.abc import Callable

import numpy as np

from src.config.defaults import CHECK_RESOLUTION, Resolution, default_run_config
from src.config.models import RunConfig
from src.engine.expansion import OscillatingExpansion, check_divergence
from src.engine.recursion import build_expansion
from src.engine.state import ExpansionState
from src.errors import ConfigurationError
from src.flow.diagnostics import (
    check_inverse,
    check_periodicity,
    check_volume,
    compare_flows,
    sample_flow_points,
)
from src.models.invariants import InvariantCheck, InvariantLedger
from src.numerics.grid import TensorGrid
from src.presets import flr
from src.presets.crosscheck import corrector_deviation, operator_deviation, symmetry_defect
from src.presets.registry import LimitModel, preset_limit_model
from src.reference.problem import StiffProblem
from src.reference.solver import solve_direct

logger = logging.getLogger(__name__)

ANALYTIC_FLOW_TOLERANCE = 1e-12
NUMERIC_FLOW_TOLERANCE = 1e-6
DIVERGENCE_TOLERANCE = 1e-6
OPERATOR_TOLERANCE = 1e-10
CROSSCHECK_TOLERANCE = 1e-6
DRIFT_TOLERANCE = 0.01
SYMMETRY_TOLERANCE = 1e-6
NUMERIC_SUBSTEPS = 64


def _guarded(ledger: InvariantLedger, name: str, check: Callable[[], InvariantCheck]) -> None:
    try:
        result = check()
    except Exception as e:
        logger.error("Check %s raised: %s", name, e)
        result = InvariantCheck(name=name, passed=False, detail=f"{type(e).__name__}: {e}")
    ledger.add(result)


def divergence_check(
    expansion: OscillatingExpansion, grid: TensorGrid, times: tuple[float, ...] = (0.0,)
) -> InvariantCheck:
    """Divergence-free check of the expansion coefficients, locating the worst node."""
    report = check_divergence(expansion, grid, times)
    location = ", ".join(f"{v:.4g}" for v in report.location)
    return InvariantCheck.against(
        "expansion.divergence",
        report.max_divergence,
        DIVERGENCE_TOLERANCE,
        detail=f"order {report.order}, t={report.t:.4g}, tau={report.tau:.4g}, x=({location})",
    )


def _flow_checks(ledger: InvariantLedger, model: LimitModel) -> None:
    sample = sample_flow_points(model.problem.grid)
    analytic = model.flow
    _guarded(
        ledger,
        "flow.closure",
        lambda: InvariantCheck.against(
            "flow.closure", check_periodicity(analytic, sample), ANALYTIC_FLOW_TOLERANCE
        ),
    )
    _guarded(
        ledger,
        "flow.volume",
        lambda: InvariantCheck.against(
            "flow.volume", check_volume(analytic, sample), ANALYTIC_FLOW_TOLERANCE
        ),
    )
    _guarded(
        ledger,
        "flow.inverse",
        lambda: InvariantCheck.against(
            "flow.inverse", check_inverse(analytic, sample), ANALYTIC_FLOW_TOLERANCE
        ),
    )
    numeric = model.numeric_flow(NUMERIC_SUBSTEPS)
    _guarded(
        ledger,
        "flow.numeric_closure",
        lambda: InvariantCheck.against(
            "flow.numeric_closure", check_periodicity(numeric, sample), NUMERIC_FLOW_TOLERANCE
        ),
    )
    _guarded(
        ledger,
        "flow.agreement",
        lambda: InvariantCheck.against(
            "flow.agreement", compare_flows(analytic, numeric, sample), NUMERIC_FLOW_TOLERANCE
        ),
    )


def _period_matrices() -> InvariantCheck:
    flow = flr.flr_flow()
    closed = flow.matrix(flr.THETA)
    exact = bool(np.array_equal(closed, np.eye(flr.DIMS)))
    start = flow.matrix(0.0)
    exact = exact and bool(np.array_equal(start, np.eye(flr.DIMS)))
    return InvariantCheck(
        name="flr.period_matrices",
        passed=exact,
        detail="R1(2pi) = 0 and R2(2pi) = I" if exact else "period matrices are not exact",
    )


def _operator_check(model: LimitModel, order: int, det_guard: float) -> InvariantCheck:
    worst = max(operator_deviation(model, i, 0.0, det_guard) for i in range(order + 1))
    return InvariantCheck.against("operators.equivalence", worst, OPERATOR_TOLERANCE)


def _expansion_checks(
    ledger: InvariantLedger, model: LimitModel, config: RunConfig
) -> ExpansionState | None:
    try:
        state = build_expansion(model.problem, config.expansion)
    except Exception as e:
        logger.error("Expansion build failed: %s", e)
        ledger.add(
            InvariantCheck(name="engine.build", passed=False, detail=f"{type(e).__name__}: {e}")
        )
        return None
    ledger.add(InvariantCheck(name="engine.build", passed=True, detail=f"{state.seconds:.2f}s"))
    ledger.add(
        InvariantCheck.against(
            "corrector.closure", state.max_closure(), config.expansion.closure_tolerance
        )
    )
    _guarded(
        ledger,
        "engine.norm_drift",
        lambda: InvariantCheck.against(
            "engine.norm_drift", state.norm_drift(2.0), DRIFT_TOLERANCE
        ),
    )
    return state


def run_invariant_suite(config: RunConfig) -> InvariantLedger:
    """Run every invariant check of a configured preset.

    Args:
        config: Run configuration (resolution, order and fields)

    Returns:
        The ledger; failures are entries, never exceptions
    """
    preset = config.problem.preset
    ledger = InvariantLedger(preset=preset)
    try:
        model = preset_limit_model(config)
    except Exception as e:
        ledger.add(InvariantCheck(name="preset.build", passed=False, detail=str(e)))
        return ledger
    grid = model.problem.grid
    order = config.expansion.order
    logger.info("Running invariant suite for %s on %s nodes", preset, grid.points)

    _guarded(
        ledger,
        "expansion.divergence",
        lambda: divergence_check(model.problem.expansion, grid, (0.0, model.problem.horizon)),
    )
    _flow_checks(ledger, model)
    if preset == "flr4d":
        _guarded(ledger, "flr.period_matrices", _period_matrices)
    _guarded(
        ledger,
        "operators.equivalence",
        lambda: _operator_check(model, order, config.expansion.det_guard),
    )

    state = _expansion_checks(ledger, model, config)
    if state is not None and model.symmetric:
        built = state
        _guarded(
            ledger,
            "beam.symmetry",
            lambda: InvariantCheck.against(
                "beam.symmetry", symmetry_defect(built), SYMMETRY_TOLERANCE
            ),
        )
    _guarded(
        ledger,
        "corrector.crosscheck",
        lambda: InvariantCheck.against(
            "corrector.crosscheck",
            corrector_deviation(model, config.expansion, min(order, 2)),
            CROSSCHECK_TOLERANCE,
        ),
    )

    def reference_drift() -> InvariantCheck:
        problem = StiffProblem.from_problem(model.problem, config.sweep.eps[0], config.reference)
        solution = solve_direct(problem)
        return InvariantCheck.against(
            "reference.norm_drift",
            solution.norm_drift,
            DRIFT_TOLERANCE,
            detail=f"eps={problem.eps:g}",
        )

    _guarded(ledger, "reference.norm_drift", reference_drift)
    logger.info(
        "Invariant suite for %s: %d/%d checks passed",
        preset,
        len(ledger.checks) - len(ledger.failures()),
        len(ledger.checks),
    )
    return ledger


def run_invariants(preset: str, resolution: Resolution | None = None) -> InvariantLedger:
    """Run the invariant suite on a preset's shipped configuration.

    Args:
        preset: Preset name
        resolution: Grid resolution (defaults to the preset's check resolution)

    Returns:
        The ledger

    Raises:
        ConfigurationError: If the preset is unknown
    """
    if preset not in CHECK_RESOLUTION:
        raise ConfigurationError(f"unknown preset {preset!r}", key="problem.preset")
    resolution = resolution or CHECK_RESOLUTION[preset]
    return run_invariant_suite(default_run_config(preset, resolution))
