"""Unit tests for the expansion engine building blocks.

Full expansion builds are covered by the integration tests.
"""

import math

import numpy as np
import pytest

from src.config.defaults import Resolution
from src.config.models import ExpansionSettings
from src.engine.averaging import solve_jacobian
from src.engine.expansion import OscillatingExpansion, TwoScaleProblem, check_divergence
from src.engine.recursion import time_derivative
from src.engine.state import ExpansionState, check_memory, estimate_memory_mb
from src.engine.transport import bracket, solve_transport
from src.errors import ConfigurationError, DegenerateFlowError, InputError, SequencingError
from src.flow.flow_map import LinearFlow
from src.numerics.grid import FloatArray, ScalarField, TensorGrid
from src.numerics.norms import norm_values
from src.presets import beam
from src.presets.fields import ConstantForm, GaussianModeForm
from src.presets.registry import default_limit_model

SMALL = Resolution(points=8, tau_points=16, checkpoints=2)


def constant_x(t: float, tau: float, points: FloatArray) -> FloatArray:
    """𝒜 = (1, 0)."""
    return np.stack([np.ones(points.shape[1]), np.zeros(points.shape[1])])


def oscillating_y(t: float, tau: float, points: FloatArray) -> FloatArray:
    """𝒜 = (0, cos τ)."""
    return np.stack([np.zeros(points.shape[1]), np.full(points.shape[1], math.cos(tau))])


def dilation(t: float, tau: float, points: FloatArray) -> FloatArray:
    """𝒜 = x, with divergence 2 in the plane."""
    return points.copy()


@pytest.fixture
def expansion() -> OscillatingExpansion:
    """Create a second-order expansion with a vanishing first order.

    Returns:
        Oscillating expansion
    """
    return OscillatingExpansion(
        dims=2,
        theta=2.0 * math.pi,
        coefficients=(constant_x, None, oscillating_y),
        tau_independent=(True, True, False),
        t_independent=True,
    )


@pytest.fixture
def plane() -> TensorGrid:
    """Create an 8×8 grid on [−1, 1]².

    Returns:
        The grid
    """
    return TensorGrid.uniform(2, -1.0, 1.0, 8, tau_points=16)


class TestOscillatingExpansion:
    """Tests for OscillatingExpansion."""

    def test_order_and_zero_orders(self, expansion: OscillatingExpansion) -> None:
        """Test the order bookkeeping."""
        assert expansion.order == 2
        assert not expansion.is_zero(0)
        assert expansion.is_zero(1)
        assert expansion.is_zero(5)

    def test_evaluate_beyond_supplied_orders(self, expansion: OscillatingExpansion) -> None:
        """Test that missing orders evaluate to zero."""
        points = np.zeros((2, 3))
        assert not np.any(expansion.evaluate(4, 0.0, 0.0, points))
        np.testing.assert_array_equal(expansion.evaluate(0, 0.0, 0.0, points)[0], np.ones(3))

    def test_assembled_field(self, expansion: OscillatingExpansion) -> None:
        """Test A_ε(t, x) = 𝒜_0 + ε²𝒜_2 at τ = t/ε."""
        eps = 0.5
        t = 0.3
        value = expansion.assembled(eps)(t, np.zeros((2, 1)))
        np.testing.assert_allclose(value[:, 0], [1.0, eps**2 * math.cos(t / eps)])

    def test_assembled_needs_positive_eps(self, expansion: OscillatingExpansion) -> None:
        """Test that ε = 0 is refused."""
        with pytest.raises(InputError, match="positive"):
            expansion.assembled(0.0)

    def test_reduced_form(self, expansion: OscillatingExpansion) -> None:
        """Test the detection of ε- and τ-independent fields."""
        assert not expansion.is_reduced()
        truncated = expansion.truncated(1)
        assert truncated.order == 1
        assert truncated.is_reduced()


class TestTwoScaleProblem:
    """Tests for TwoScaleProblem consistency checks."""

    def make(
        self, grid: TensorGrid, expansion: OscillatingExpansion, horizon: float = 1.0
    ) -> TwoScaleProblem:
        """Create a problem with the beam flow and zero initial data."""
        return TwoScaleProblem(
            grid=grid,
            flow=beam.beam_flow(),
            fast_field=beam.fast_field,
            expansion=expansion,
            initial=ScalarField.zeros(grid),
            horizon=horizon,
        )

    def test_valid_problem(self, plane: TensorGrid, expansion: OscillatingExpansion) -> None:
        """Test that consistent inputs are accepted."""
        assert self.make(plane, expansion).horizon == 1.0

    def test_non_positive_horizon(
        self, plane: TensorGrid, expansion: OscillatingExpansion
    ) -> None:
        """Test that T must be positive."""
        with pytest.raises(InputError, match="horizon"):
            self.make(plane, expansion, horizon=0.0)

    def test_dimension_mismatch(self, expansion: OscillatingExpansion) -> None:
        """Test that grid and flow dimensions must agree."""
        grid = TensorGrid.uniform(4, -1.0, 1.0, 8, tau_points=16)
        with pytest.raises(InputError, match="dimensions"):
            self.make(grid, expansion)

    def test_period_mismatch(self, expansion: OscillatingExpansion) -> None:
        """Test that grid and flow periods must agree."""
        grid = TensorGrid.uniform(2, -1.0, 1.0, 8, tau_points=16, theta=1.0)
        with pytest.raises(InputError, match="periods"):
            self.make(grid, expansion)


class TestDivergenceCheck:
    """Tests for the sampled divergence check."""

    def test_beam_coefficients_are_divergence_free(self, plane: TensorGrid) -> None:
        """Test that (0, E(r)) has zero divergence."""
        form = GaussianModeForm(harmonic=1)
        report = check_divergence(beam.beam_expansion([form], 0), plane)
        assert report.max_divergence == 0.0
        assert report.passed()

    def test_dilation_is_detected(self, plane: TensorGrid) -> None:
        """Test that 𝒜 = x is reported with divergence 2."""
        expansion = OscillatingExpansion(2, 2.0 * math.pi, (None, dilation), (True, True))
        report = check_divergence(expansion, plane, stride=3)
        assert report.max_divergence == pytest.approx(2.0, rel=1e-6)
        assert report.order == 1
        assert not report.passed()


class TestTimeDerivative:
    """Tests for checkpoint time derivatives."""

    def test_exact_for_quadratics(self) -> None:
        """Test that ∂_t t² = 2t at interior and boundary checkpoints."""
        times = np.linspace(0.0, 1.0, 5)
        values = (times**2)[:, None] * np.ones((5, 3))
        for m in (0, 2, 4):
            np.testing.assert_allclose(time_derivative(values, times, m), 2.0 * times[m])

    def test_needs_three_checkpoints(self) -> None:
        """Test the minimum number of checkpoints."""
        times = np.array([0.0, 1.0])
        with pytest.raises(ConfigurationError, match="3 checkpoints"):
            time_derivative(np.zeros((2, 4)), times, 0)


class TestBracket:
    """Tests for checkpoint bracketing."""

    def test_interior_time(self) -> None:
        """Test the interval index and weight inside the range."""
        assert bracket(np.array([0.0, 0.5, 1.0]), 0.25) == (0, 0.5)

    def test_clamped_times(self) -> None:
        """Test clamping at both ends of the range."""
        times = np.array([0.0, 0.5, 1.0])
        assert bracket(times, 1.0) == (1, 1.0)
        assert bracket(times, -1.0) == (0, 0.0)
        assert bracket(np.array([0.0]), 0.3) == (0, 0.0)


def _gaussian(points: FloatArray) -> FloatArray:
    """Unit Gaussian in the plane."""
    return np.exp(-0.5 * np.sum(points**2, axis=0))


class TestSolveTransport:
    """Tests for checkpoint transport with closed-form solutions."""

    @pytest.fixture
    def box(self) -> TensorGrid:
        """Create a 64×64 grid on [−6, 6]².

        Returns:
            The grid
        """
        return TensorGrid.uniform(2, -6.0, 6.0, 64, tau_points=16)

    def _drift(self, grid: TensorGrid, times: FloatArray) -> FloatArray:
        b = np.zeros((len(times), 2, grid.size))
        b[:, 1, :] = 0.5
        return b

    def test_constant_drift_with_exact_initial_data(self, box: TensorGrid) -> None:
        """Test that b = (0, ½) translates the Gaussian to g(r, v − t/2)."""
        times = np.linspace(0.0, 1.0, 5)
        init = ScalarField.from_function(box, _gaussian)
        solution = solve_transport(
            box, self._drift(box, times), None, init, times, initial_exact=_gaussian
        )
        nodes = box.coordinates()
        away = nodes[1] > -5.0
        for t, field in zip(times, solution, strict=True):
            shifted = nodes - np.array([[0.0], [0.5 * t]])
            np.testing.assert_allclose(field.flat[away], _gaussian(shifted)[away], atol=1e-12)

    def test_constant_drift_with_interpolated_initial_data(self, box: TensorGrid) -> None:
        """Test the cubic remap error of a translated Gaussian."""
        times = np.linspace(0.0, 1.0, 5)
        init = ScalarField.from_function(box, _gaussian)
        final = solve_transport(box, self._drift(box, times), None, init, times)[-1]
        nodes = box.coordinates()
        away = nodes[1] > -5.0
        exact = _gaussian(nodes - np.array([[0.0], [0.5]]))
        error = np.where(away, final.flat - exact, 0.0)
        assert norm_values(box, error) < 1e-3

    def test_source_without_drift(self, box: TensorGrid) -> None:
        """Test that b ≡ 0 with source x₁ gives V = t·x₁."""
        times = np.linspace(0.0, 1.0, 5)
        nodes = box.coordinates()
        source = np.tile(nodes[0], (len(times), 1))
        solution = solve_transport(
            box, np.zeros((len(times), 2, box.size)), source, ScalarField.zeros(box), times
        )
        for t, field in zip(times, solution, strict=True):
            np.testing.assert_allclose(field.flat, t * nodes[0], atol=1e-12)


class TestJacobianSolve:
    """Tests for guarded Jacobian solves."""

    def test_rotation_solve(self) -> None:
        """Test that the solve inverts the beam rotation."""
        points = np.array([[0.5, -1.0], [2.0, 0.25]])
        rhs = beam.rotation(0.7) @ points
        solved = solve_jacobian(beam.beam_flow(), 0.7, points, 0.0, rhs)
        np.testing.assert_allclose(solved, points, atol=1e-12)

    def test_degenerate_flow(self) -> None:
        """Test that a volume-changing flow is refused."""
        flow = LinearFlow(2, 2.0 * math.pi, lambda lag: 2.0 * np.eye(2))
        with pytest.raises(DegenerateFlowError) as info:
            solve_jacobian(flow, 0.0, np.zeros((2, 1)), 0.0, np.ones((2, 1)))
        assert info.value.determinant == pytest.approx(4.0)


class TestExpansionState:
    """Tests for ExpansionState bookkeeping."""

    def test_memory_estimate_grows_with_order(self, plane: TensorGrid) -> None:
        """Test that higher orders need more memory."""
        assert estimate_memory_mb(plane, 2, 8) > estimate_memory_mb(plane, 1, 8)

    def test_memory_limit(self, plane: TensorGrid) -> None:
        """Test that exceeding max_memory_mb names the key."""
        settings = ExpansionSettings.model_validate({"max_memory_mb": 1e-6})
        with pytest.raises(ConfigurationError) as info:
            check_memory(plane, settings)
        assert info.value.key == "expansion.max_memory_mb"

    def test_require_before_build(self) -> None:
        """Test that orders cannot be read before they are computed."""
        model = default_limit_model("beam", SMALL)
        state = ExpansionState(
            problem=model.problem,
            settings=ExpansionSettings(),
            alpha_table=model.closed_form_alpha,
            times=np.linspace(0.0, 1.0, 3),
        )
        assert state.order == -1
        with pytest.raises(SequencingError, match="V_0"):
            state.slow_at(0, 0)
        with pytest.raises(SequencingError, match="W_1"):
            state.corrector_at(1, 0)
        assert state.corrector_at(0, 0) is None

    def test_constant_form_is_tau_independent(self) -> None:
        """Test that constant coefficients give a reduced beam expansion."""
        expansion = beam.beam_expansion([ConstantForm(value=0.5)], 1)
        assert expansion.is_reduced()
