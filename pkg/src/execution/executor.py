"""Convergence sweep orchestration.

This module builds the ε-independent expansion once, runs the reference
solver for every ε concurrently on worker threads and turns the measured
errors into a convergence report. A failing or timed-out ε run is recorded
in its rows and never aborts the other runs.
"""

import asyncio
import logging
import time
from dataclasses import dataclass
from datetime import datetime

from src.config.models import RunConfig
from src.engine.reconstruction import partial_sums
from src.engine.recursion import build_expansion
from src.engine.state import ExpansionState
from src.execution.fitting import fit_slope
from src.execution.state import SweepState
from src.execution.timeout import with_timeout
from src.flow.diagnostics import require_periodic, sample_flow_points
from src.models.report import ConvergenceReport, ReferenceRun, RunStatus, SweepRow
from src.numerics.norms import norm_values, parse_norm
from src.presets.registry import LimitModel, preset_limit_model
from src.reference.problem import StiffProblem
from src.reference.solver import ReferenceSolution, solve_direct

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EngineBuild:
    """The expansion shared by every ε of a sweep.

    Attributes:
        model: Preset limit model
        state: Frozen expansion state through order K
        flow_residual: θ-closure residual of the fast flow
        seconds: Build wall-clock time
    """

    model: LimitModel
    state: ExpansionState
    flow_residual: float
    seconds: float


@dataclass(frozen=True, eq=False)
class RunOutcome:
    """Result of one ε run: errors per order K' ≤ K, or nothing on failure."""

    run: ReferenceRun
    errors: list[float] | None = None
    seconds: float | None = None


def build_engine(config: RunConfig) -> EngineBuild:
    """Build the limit model, check its flow and compute the expansion.

    Raises:
        ConfigurationError: If the flow does not close or memory would be exceeded
    """
    started = time.perf_counter()
    model = preset_limit_model(config)
    sample = sample_flow_points(model.problem.grid)
    residual = require_periodic(model.flow, sample, config.expansion.flow_tolerance)
    state = build_expansion(model.problem, config.expansion)
    seconds = time.perf_counter() - started
    logger.info("Engine build for %s K=%d took %.2fs", model.name, state.order, seconds)
    return EngineBuild(model=model, state=state, flow_residual=residual, seconds=seconds)


def measure_errors(
    state: ExpansionState, solution: ReferenceSolution, p: float, order: int
) -> list[float]:
    """Return max over output times of ‖u_ε − Σ_{k≤K'} ε^k U_k‖_p for every K' ≤ order."""
    errors = [0.0] * (order + 1)
    for t, reference in zip(solution.times, solution.fields, strict=True):
        sums = partial_sums(state, solution.eps, t, order)
        for k, approximation in enumerate(sums):
            gap = norm_values(state.grid, reference.flat - approximation.flat, p)
            errors[k] = max(errors[k], gap)
    return errors


def _solve_and_measure(
    build: EngineBuild, config: RunConfig, eps: float
) -> tuple[ReferenceSolution, list[float]]:
    problem = StiffProblem.from_problem(build.model.problem, eps, config.reference)
    solution = solve_direct(problem, config.output_times)
    errors = measure_errors(build.state, solution, parse_norm(config.sweep.norm), build.state.order)
    return solution, errors


async def execute_reference_run(
    build: EngineBuild,
    config: RunConfig,
    eps: float,
    semaphore: asyncio.Semaphore,
    tracker: SweepState,
) -> RunOutcome:
    """Run the reference solver for one ε on a worker thread.

    Args:
        build: Shared expansion
        config: Run configuration
        eps: Scale parameter
        semaphore: Worker limit
        tracker: Sweep progress tracker

    Returns:
        The run record with errors, or a failed/timed-out record
    """
    run = ReferenceRun(eps=eps)
    async with semaphore:
        run.started_at = datetime.now()
        try:
            result = await with_timeout(
                asyncio.to_thread(_solve_and_measure, build, config, eps),
                config.sweep.timeout_seconds,
            )
        except Exception as e:
            logger.error("Reference run eps=%g failed: %s", eps, e)
            run.mark_failed(str(e))
            tracker.update_status(eps, run.status)
            return RunOutcome(run=run)

    if result is None:
        logger.warning("Reference run eps=%g timed out", eps)
        run.mark_timeout()
        tracker.update_status(eps, run.status)
        return RunOutcome(run=run)

    solution, errors = result
    run.norm_drift = solution.norm_drift
    run.steps = solution.steps
    run.mark_completed()
    tracker.update_status(eps, run.status)
    logger.info(
        "eps=%g done in %.2fs (%d/%d runs finished)",
        eps,
        solution.seconds,
        tracker.get_completed_count() + tracker.get_failed_count(),
        len(tracker.runs),
    )
    return RunOutcome(run=run, errors=errors, seconds=solution.seconds)


def _rows(build: EngineBuild, config: RunConfig, outcomes: list[RunOutcome]) -> list[SweepRow]:
    state = build.state
    timings = config.output.timings
    closure = [float(values.max()) if len(values) else 0.0 for values in state.closure]
    rows: list[SweepRow] = []
    for outcome in outcomes:
        for k in range(state.order + 1):
            rows.append(
                SweepRow(
                    preset=build.model.name,
                    order=k,
                    eps=outcome.run.eps,
                    norm=config.sweep.norm,
                    error=None if outcome.errors is None else outcome.errors[k],
                    w_closure_residual=max(closure[: k + 1]),
                    flow_residual=build.flow_residual,
                    norm_drift=outcome.run.norm_drift,
                    engine_seconds=build.seconds if timings else None,
                    reference_seconds=outcome.seconds if timings else None,
                    status=outcome.run.status,
                )
            )
    return rows


def assemble_report(
    build: EngineBuild, config: RunConfig, outcomes: list[RunOutcome]
) -> ConvergenceReport:
    """Collect rows, fit slopes per order and attach them to the rows."""
    report = ConvergenceReport(
        preset=build.model.name,
        order=build.state.order,
        norm=config.sweep.norm,
        rows=_rows(build, config, outcomes),
        engine_seconds=build.seconds,
        flow_residual=build.flow_residual,
        runs=[outcome.run for outcome in outcomes],
    )
    for k in range(report.order + 1):
        fit = fit_slope(*report.errors(k))
        if fit is None:
            continue
        report.fits[k] = fit
        for row in report.rows:
            if row.order == k:
                row.r_squared = fit.r_squared
                row.slope_fit = fit.slope if fit.reliable else None
        if fit.reliable:
            logger.info(
                "K=%d: slope %.3f (R²=%.4f, %d points)", k, fit.slope, fit.r_squared, fit.points
            )
        else:
            logger.warning(
                "K=%d: slope unreliable (R²=%.4f, %d points)", k, fit.r_squared, fit.points
            )
    return report


async def run_sweep_async(config: RunConfig, workers: int | None = None) -> ConvergenceReport:
    """Run a convergence sweep with concurrent reference solves.

    Args:
        config: Run configuration
        workers: Concurrent solves (defaults to the configured count)

    Returns:
        The convergence report

    Raises:
        ConfigurationError: If the engine cannot be built from the configuration
    """
    build = await asyncio.to_thread(build_engine, config)
    limit = workers or config.sweep.workers
    semaphore = asyncio.Semaphore(limit)
    tracker = SweepState(preset=build.model.name)
    for eps in config.sweep.eps:
        tracker.add_run(eps)
    logger.info("Sweeping %d eps values with %d workers", len(config.sweep.eps), limit)
    outcomes = await asyncio.gather(
        *(
            execute_reference_run(build, config, eps, semaphore, tracker)
            for eps in config.sweep.eps
        )
    )
    if tracker.get_failed_count():
        logger.warning(
            "%d of %d reference runs did not complete", tracker.get_failed_count(), len(outcomes)
        )
    return assemble_report(build, config, list(outcomes))


def run_sweep(config: RunConfig, workers: int | None = None) -> ConvergenceReport:
    """Synchronous entry point of run_sweep_async."""
    return asyncio.run(run_sweep_async(config, workers))


def completed(report: ConvergenceReport) -> bool:
    """Whether every reference run of the report completed."""
    return all(run.status == RunStatus.COMPLETED for run in report.runs)
