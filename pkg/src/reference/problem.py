"""Description of the stiff problem solved directly by the reference solver."""

import math
from dataclasses import dataclass

from src.config.defaults import DEFAULT_DRIFT_SAMPLES, DEFAULT_MAX_MEMORY_MB, DEFAULT_N_FAST
from src.config.models import ReferenceSettings
from src.engine.expansion import PointFunction, SlowField, TwoScaleProblem
from src.errors import InputError
from src.flow.integrators import FastField
from src.numerics.characteristics import RemapMode, Velocity
from src.numerics.grid import FloatArray, ScalarField, TensorGrid

MIN_N_FAST = 32


@dataclass(frozen=True, eq=False)
class StiffProblem:
    """∂_t u_ε + A_ε·∇u_ε + (1/ε) L·∇u_ε = 0 at one fixed ε.

    Attributes:
        grid: Phase-space grid
        eps: Scale parameter ε > 0
        slow_field: Assembled A_ε(t, x)
        fast_field: Fast field L(t, τ, x)
        theta: Period of L in τ
        initial: Initial data u⁰
        horizon: Final time T
        n_fast: Time steps per fast period (at least 32)
        initial_exact: Optional closed form of u⁰
        remap: Remap once from the initial data or after every step
        drift_samples: Evenly spaced times in (0, T] at which the norm drift is
            measured with the "initial" remap
        max_memory_mb: Upper bound for the solver working set
    """

    grid: TensorGrid
    eps: float
    slow_field: SlowField
    fast_field: FastField
    theta: float
    initial: ScalarField
    horizon: float
    n_fast: int = DEFAULT_N_FAST
    initial_exact: PointFunction | None = None
    remap: RemapMode = RemapMode.INITIAL
    drift_samples: int = DEFAULT_DRIFT_SAMPLES
    max_memory_mb: float = DEFAULT_MAX_MEMORY_MB

    def __post_init__(self) -> None:
        if self.eps <= 0.0:
            raise InputError("eps must be positive")
        if self.horizon <= 0.0:
            raise InputError("horizon T must be positive")
        if self.n_fast < MIN_N_FAST:
            raise InputError(f"n_fast must be at least {MIN_N_FAST} to resolve the fast scale")
        if self.drift_samples < 1:
            raise InputError("drift_samples must be at least 1")

    @classmethod
    def from_problem(
        cls, problem: TwoScaleProblem, eps: float, settings: ReferenceSettings
    ) -> "StiffProblem":
        """Assemble the stiff problem of an expansion problem at a given ε."""
        return cls(
            grid=problem.grid,
            eps=eps,
            slow_field=problem.expansion.assembled(eps),
            fast_field=problem.fast_field,
            theta=problem.grid.theta,
            initial=problem.initial,
            horizon=problem.horizon,
            n_fast=settings.n_fast,
            initial_exact=problem.initial_exact,
            remap=RemapMode(settings.remap),
            drift_samples=settings.drift_samples,
            max_memory_mb=settings.max_memory_mb,
        )

    @property
    def time_step(self) -> float:
        """δt = εθ / n_fast."""
        return self.eps * self.theta / self.n_fast

    @property
    def total_steps(self) -> int:
        """ceil(T / δt)."""
        return math.ceil(self.horizon / self.time_step - 1e-9)

    def velocity(self) -> Velocity:
        """Combined field A_ε(t, x) + (1/ε) L(t, t/ε, x)."""
        eps = self.eps

        def combined(t: float, points: FloatArray) -> FloatArray:
            tau = (t / eps) % self.theta
            return self.slow_field(t, points) + self.fast_field(t, tau, points) / eps

        return combined
