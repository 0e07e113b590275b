"""Storage of the computed expansion profiles.

ExpansionState holds, for every order k ≤ K, the slow part V_k and the
corrector W_k on the slow-time checkpoints, together with the averaged
fields ã_i. W_k is stored in the pulled-back frame: entry [m, j, n] is
W_k(t_m, τ_j, y_n), and U_k(t, τ, x) = V_k(t, y) + W_k(t, τ, y) at
y = X(−τ; x, t; 0).
"""

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from src.config.models import ExpansionSettings
from src.engine.expansion import TwoScaleProblem
from src.errors import ConfigurationError, SequencingError
from src.numerics.grid import FloatArray, TensorGrid
from src.numerics.norms import norm_values

AlphaTable = Callable[[int, float, FloatArray], FloatArray]
"""α_i at every τ node: (i, t, points) -> array of shape (tau_points, dims, P)."""

_BYTES_PER_MB = 1024.0 * 1024.0


def estimate_memory_mb(grid: TensorGrid, order: int, checkpoints: int) -> float:
    """Estimate the peak memory of an expansion build in megabytes.

    Counts the stored V_k, W_k and ã_i, the cached α tables and the per
    checkpoint gradient work arrays.
    """
    nodes = grid.size
    count = checkpoints + 1
    taus = grid.tau_points
    dims = grid.dims
    stored = (order + 1) * count * nodes + order * count * taus * nodes
    stored += (order + 1) * count * dims * nodes
    working = (order + 1) * taus * dims * nodes + (order + 2) * taus * dims * nodes
    return 8.0 * (stored + working) / _BYTES_PER_MB


def check_memory(grid: TensorGrid, settings: ExpansionSettings) -> float:
    """Raise if the estimated build memory exceeds the configured limit.

    Returns:
        The estimate in megabytes

    Raises:
        ConfigurationError: If the estimate exceeds max_memory_mb
    """
    estimate = estimate_memory_mb(grid, settings.order, settings.checkpoints)
    if estimate > settings.max_memory_mb:
        raise ConfigurationError(
            f"expansion state needs about {estimate:.0f} MB, above the limit of "
            f"{settings.max_memory_mb:.0f} MB; reduce points, tau_points, checkpoints or K",
            key="expansion.max_memory_mb",
        )
    return estimate


@dataclass(eq=False)
class ExpansionState:
    """Profiles V_k, W_k and averaged fields ã_i on the slow-time checkpoints.

    Attributes:
        problem: The expanded problem
        settings: Engine options used for the build
        alpha_table: Source of the α_i tables
        times: Checkpoint times t_0 … t_M
        slow: V_k per order, arrays of shape (M + 1, size)
        correctors: W_k per order (None for k = 0), arrays of shape (M + 1, tau_points, size)
        averaged: ã_i per order, arrays of shape (M + 1, dims, size)
        closure: Relative W_k closure residual per order and checkpoint
        seconds: Wall-clock duration of the build
    """

    problem: TwoScaleProblem
    settings: ExpansionSettings
    alpha_table: AlphaTable
    times: FloatArray
    slow: list[FloatArray] = field(default_factory=list)
    correctors: list[FloatArray | None] = field(default_factory=list)
    averaged: list[FloatArray] = field(default_factory=list)
    closure: list[FloatArray] = field(default_factory=list)
    seconds: float = 0.0
    frozen: bool = False
    _alpha_cache: dict[tuple[int, int], FloatArray] = field(default_factory=dict, repr=False)

    @property
    def grid(self) -> TensorGrid:
        """Phase-space grid of the problem."""
        return self.problem.grid

    @property
    def order(self) -> int:
        """Highest order whose slow part has been computed."""
        return len(self.slow) - 1

    @property
    def checkpoints(self) -> int:
        """Number of checkpoints M + 1."""
        return len(self.times)

    @property
    def time_invariant(self) -> bool:
        """Whether the α tables are identical on every checkpoint."""
        return self.problem.expansion.t_independent and self.problem.flow.t_independent

    def require(self, k: int, corrector: bool = False) -> None:
        """Raise unless V_k (and W_k when asked) has been computed.

        Raises:
            SequencingError: If the order is not available yet
        """
        if corrector:
            if not 0 <= k < len(self.correctors):
                raise SequencingError(f"W_{k} has not been computed yet")
        elif not 0 <= k < len(self.slow):
            raise SequencingError(f"V_{k} has not been computed yet")

    def slow_at(self, k: int, m: int) -> FloatArray:
        """V_k(t_m) at the nodes."""
        self.require(k)
        return self.slow[k][m]

    def corrector_at(self, k: int, m: int) -> FloatArray | None:
        """W_k(t_m, τ_j) at the nodes, shape (tau_points, size); None when W_k ≡ 0."""
        if k == 0:
            return None
        self.require(k, corrector=True)
        values = self.correctors[k]
        return None if values is None else values[m]

    def alpha(self, i: int, m: int) -> FloatArray:
        """α_i(t_m, τ_j, y_n), shape (tau_points, dims, size)."""
        key = (i, 0 if self.time_invariant else m)
        cached = self._alpha_cache.get(key)
        if cached is not None:
            return cached
        table = self.alpha_table(i, float(self.times[m]), self.grid.coordinates())
        if self.time_invariant:
            self._alpha_cache[key] = table
        return table

    def max_closure(self) -> float:
        """Largest relative W-closure residual over all orders and checkpoints."""
        values = [float(np.max(c, initial=0.0)) for c in self.closure]
        return max(values, default=0.0)

    def norm_drift(self, p: float = 2.0) -> float:
        """Largest relative change of ‖V_0(t_m)‖ over the checkpoints."""
        self.require(0)
        norms = [norm_values(self.grid, v, p) for v in self.slow[0]]
        if norms[0] == 0.0:
            return 0.0
        return max(abs(n - norms[0]) for n in norms) / norms[0]

    def freeze(self) -> "ExpansionState":
        """Make every stored array read-only and drop the α cache."""
        for array in [*self.slow, *self.averaged, *self.closure]:
            array.flags.writeable = False
        for corrector in self.correctors:
            if corrector is not None:
                corrector.flags.writeable = False
        self._alpha_cache.clear()
        self.frozen = True
        return self
