"""Configuration data models for two-scale expansion runs.

This module defines Pydantic models for validating run configurations
loaded from TOML files. Every model rejects unknown keys so that a
misspelled option can never fall back to a silent default.
"""

import math
from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config.defaults import (
    DEFAULT_CHECKPOINTS,
    DEFAULT_DRIFT_SAMPLES,
    DEFAULT_EPS,
    DEFAULT_MAX_MEMORY_MB,
    DEFAULT_N_FAST,
    DEFAULT_OUTPUT_DIRECTORY,
    DEFAULT_TAU_POINTS,
    PRESET_DIMS,
)
from src.presets.fields import FieldForm

PresetName = Literal["beam", "gc4d", "flr4d"]
NormName = Literal["1", "2", "inf"]

_STRICT = ConfigDict(extra="forbid", populate_by_name=True)


class ProblemConfig(BaseModel):
    """Preset, phase-space box and horizon.

    Attributes:
        preset: Application preset (beam, gc4d or flr4d)
        lower: Lower box bound per phase-space dimension
        upper: Upper box bound per phase-space dimension
        points: Grid points per dimension (at least 8)
        final_time: Horizon T (TOML key ``T``)
        parallel_velocity: Parallel advection constant of the FLR model (0 in 4D)
    """

    model_config = _STRICT

    preset: PresetName
    lower: list[float]
    upper: list[float]
    points: list[int]
    final_time: float = Field(alias="T", gt=0.0)
    parallel_velocity: float = 0.0

    @field_validator("points")
    @classmethod
    def validate_points(cls, v: list[int]) -> list[int]:
        """Validate that every axis has at least 8 points.

        Args:
            v: Points per axis

        Returns:
            The validated point counts

        Raises:
            ValueError: If an axis has fewer than 8 points
        """
        if any(count < 8 for count in v):
            raise ValueError("every axis needs at least 8 points")
        return v


class FieldsConfig(BaseModel):
    """Initial data and field expansions, one catalog form per expansion order.

    Attributes:
        initial: Initial data u⁰ over the whole phase space
        e: Beam electric field ℰ_i(t, τ, r)
        e_x: First in-plane component of ℰ_i(t, τ, x) (gc4d, flr4d)
        e_y: Second in-plane component of ℰ_i(t, τ, x) (gc4d, flr4d)
        b_z: Out-of-plane magnetic perturbation ℬ_i(t, τ, x) (gc4d, flr4d)
        beta_z: Strong-field strength β_z(τ) along e_z, the forms summed (gc4d;
            empty means β = e_z)
    """

    model_config = _STRICT

    initial: FieldForm
    e: list[FieldForm] = Field(default_factory=list)
    e_x: list[FieldForm] = Field(default_factory=list)
    e_y: list[FieldForm] = Field(default_factory=list)
    b_z: list[FieldForm] = Field(default_factory=list)
    beta_z: list[FieldForm] = Field(default_factory=list)


class ExpansionSettings(BaseModel):
    """Resolution and options of the expansion engine.

    Attributes:
        order: Expansion order K (TOML key ``K``)
        tau_points: Number of τ nodes
        checkpoints: Number of slow-time intervals M (M + 1 checkpoints)
        tau_integration: Antiderivative rule in τ
        transport_mode: Remap from the initial data once, or after every step
        transport_substeps: Characteristic steps per checkpoint interval
        det_guard: Largest accepted |det ∇_x X − 1|
        closure_tolerance: Relative W-closure tolerance
        flow_tolerance: θ-closure tolerance for numeric flows
        max_memory_mb: Upper bound for the stored expansion state
    """

    model_config = _STRICT

    order: int = Field(default=1, ge=0, le=4, alias="K")
    tau_points: int = Field(default=DEFAULT_TAU_POINTS, ge=16)
    checkpoints: int = Field(default=DEFAULT_CHECKPOINTS, ge=2)
    tau_integration: Literal["spectral", "trapezoid"] = "spectral"
    transport_mode: Literal["initial", "step"] = "initial"
    transport_substeps: int = Field(default=1, ge=1)
    det_guard: float = Field(default=0.5, gt=0.0, lt=1.0)
    closure_tolerance: float = Field(default=1e-6, gt=0.0)
    flow_tolerance: float = Field(default=1e-6, gt=0.0)
    max_memory_mb: float = Field(default=DEFAULT_MAX_MEMORY_MB, gt=0.0)


class ReferenceSettings(BaseModel):
    """Options of the ε-resolving reference solver.

    Attributes:
        n_fast: Time steps per fast period (at least 32)
        remap: Remap from the initial data once, or after every step
        drift_samples: Times in (0, T] at which the "initial" remap measures norm drift
        max_memory_mb: Upper bound for the solver working set
    """

    model_config = _STRICT

    n_fast: int = Field(default=DEFAULT_N_FAST, ge=32)
    remap: Literal["initial", "step"] = "initial"
    drift_samples: int = Field(default=DEFAULT_DRIFT_SAMPLES, ge=1)
    max_memory_mb: float = Field(default=DEFAULT_MAX_MEMORY_MB, gt=0.0)


class SweepSettings(BaseModel):
    """ε values, error norm and concurrency of a convergence sweep.

    Attributes:
        eps: Strictly decreasing ε values in (0, 1)
        norm: Error norm (1, 2 or inf)
        output_times: Times at which errors are measured (default: T only)
        workers: Concurrent reference solves
        timeout_seconds: Optional limit per reference solve
    """

    model_config = _STRICT

    eps: list[float] = Field(default_factory=lambda: list(DEFAULT_EPS))
    norm: NormName = "2"
    output_times: list[float] | None = None
    workers: int = Field(default=1, ge=1)
    timeout_seconds: float | None = Field(default=None, gt=0.0)

    @field_validator("norm", mode="before")
    @classmethod
    def normalize_norm(cls, v: object) -> object:
        """Accept integer norms (1, 2) next to their string labels."""
        if isinstance(v, int | float) and not isinstance(v, bool):
            return "inf" if math.isinf(v) else str(int(v))
        return v

    @field_validator("eps")
    @classmethod
    def validate_eps(cls, v: list[float]) -> list[float]:
        """Validate the ε list.

        Args:
            v: ε values

        Returns:
            The validated list

        Raises:
            ValueError: If empty, outside (0, 1) or not strictly decreasing
        """
        if not v:
            raise ValueError("at least one eps value is required")
        for value in v:
            if not 0.0 < value < 1.0:
                raise ValueError(f"eps values must lie in (0, 1), got {value}")
        if any(b >= a for a, b in zip(v, v[1:], strict=False)):
            raise ValueError("eps values must be strictly decreasing")
        return v


class OutputSettings(BaseModel):
    """Where and how results are written.

    Attributes:
        directory: Output directory for the CSV report
        timings: Write wall-clock runtimes into the CSV (breaks byte-identity)
        database: Optional DuckDB file archiving every report
    """

    model_config = _STRICT

    directory: str = DEFAULT_OUTPUT_DIRECTORY
    timings: bool = False
    database: str | None = None


class RunConfig(BaseModel):
    """Root configuration of a run.

    Attributes:
        problem: Preset, box and horizon
        fields: Initial data and field expansions
        expansion: Engine options
        reference: Reference solver options
        sweep: ε sweep options
        output: Output options
    """

    model_config = _STRICT

    problem: ProblemConfig
    fields: FieldsConfig
    expansion: ExpansionSettings
    reference: ReferenceSettings
    sweep: SweepSettings
    output: OutputSettings

    @model_validator(mode="after")
    def validate_preset(self) -> Self:
        """Validate that box, fields and times fit the chosen preset.

        Returns:
            The validated configuration

        Raises:
            ValueError: If the configuration does not fit the preset
        """
        dims = PRESET_DIMS[self.problem.preset]
        problem = self.problem
        if not len(problem.lower) == len(problem.upper) == len(problem.points) == dims:
            raise ValueError(
                f"preset {problem.preset} needs {dims} entries in problem.lower, "
                "problem.upper and problem.points"
            )
        if any(hi <= lo for lo, hi in zip(problem.lower, problem.upper, strict=True)):
            raise ValueError("problem.upper must exceed problem.lower on every axis")
        if problem.preset == "beam":
            if self.fields.e_x or self.fields.e_y or self.fields.b_z:
                raise ValueError("beam preset takes fields.e only")
        elif self.fields.e:
            raise ValueError(f"{problem.preset} preset takes fields.e_x, e_y and b_z, not e")
        if problem.preset != "gc4d" and self.fields.beta_z:
            raise ValueError("fields.beta_z only applies to the gc4d preset")
        if problem.preset != "flr4d" and problem.parallel_velocity != 0.0:
            raise ValueError("problem.parallel_velocity only applies to the flr4d preset")
        if problem.parallel_velocity != 0.0:
            raise ValueError("parallel advection is not part of the 4D reduction; keep it at 0")
        for t in self.sweep.output_times or []:
            if not 0.0 < t <= problem.final_time:
                raise ValueError(f"sweep.output_times must lie in (0, T], got {t}")
        return self

    @property
    def dims(self) -> int:
        """Phase-space dimension of the preset."""
        return PRESET_DIMS[self.problem.preset]

    @property
    def output_times(self) -> list[float]:
        """Times at which errors are measured."""
        return list(self.sweep.output_times or [self.problem.final_time])
