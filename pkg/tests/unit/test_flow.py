"""Unit tests for characteristic flows, their integrators and diagnostics."""

import math

import numpy as np
import pytest

from src.errors import ConfigurationError, InputError
from src.flow.diagnostics import (
    check_group,
    check_inverse,
    check_periodicity,
    check_volume,
    compare_flows,
    require_periodic,
    sample_flow_points,
)
from src.flow.flow_map import (
    AnalyticFlow,
    FlowKind,
    LinearFlow,
    NumericFlow,
    flow_dt,
    flow_jacobian,
)
from src.flow.integrators import (
    finite_difference_gradient,
    integrate_flow,
    integrate_variational,
)
from src.numerics.grid import TensorGrid
from src.presets import beam, flr


@pytest.fixture
def plane() -> TensorGrid:
    """Create the phase plane [−3, 3]².

    Returns:
        The grid
    """
    return TensorGrid.uniform(2, -3.0, 3.0, 16)


class TestIntegrators:
    """Tests for Runge–Kutta integration of the fast field."""

    def test_rotation_closes_after_one_period(self) -> None:
        """Test that the beam rotation returns to its start after 2π."""
        x = np.array([[1.0, -0.5], [0.5, 2.0]])
        closed = integrate_flow(beam.fast_field, 0.0, 0.0, 2.0 * math.pi, x)
        np.testing.assert_allclose(closed, x, atol=1e-6)

    def test_single_point_keeps_its_shape(self) -> None:
        """Test that a 1D input gives a 1D result."""
        result = integrate_flow(beam.fast_field, 0.0, 0.0, 1.0, np.array([1.0, 0.0]))
        assert result.shape == (2,)
        np.testing.assert_allclose(result, [math.cos(1.0), -math.sin(1.0)], atol=1e-8)

    def test_too_few_substeps_rejected(self) -> None:
        """Test the lower bound on steps per unit τ."""
        with pytest.raises(InputError, match="at least 8"):
            integrate_flow(beam.fast_field, 0.0, 0.0, 1.0, np.zeros(2), substeps_per_unit=4)

    def test_variational_jacobian_matches_rotation(self) -> None:
        """Test ∇_x X against the closed-form rotation matrix."""
        _, jac = integrate_variational(
            beam.fast_field, 0.0, 0.0, 0.8, np.array([0.3, -1.2]), 64, beam.fast_field_gradient
        )
        np.testing.assert_allclose(jac, beam.rotation(0.8), atol=1e-8)

    def test_finite_difference_gradient(self) -> None:
        """Test central differences of the fast field against the exact gradient."""
        points = np.array([[0.5, -1.0], [2.0, 0.1]])
        approx = finite_difference_gradient(beam.fast_field)(0.0, 0.0, points)
        np.testing.assert_allclose(approx, beam.fast_field_gradient(0.0, 0.0, points), atol=1e-8)


class TestFlowMaps:
    """Tests for the FlowMap implementations."""

    def test_linear_flow_reduces_the_lag(self) -> None:
        """Test that Φ(θ) is the identity in floating point."""
        flow = beam.beam_flow()
        assert flow.kind is FlowKind.ANALYTIC
        assert np.array_equal(flow.matrix(2.0 * math.pi), np.eye(2))

    def test_linear_flow_jacobian_is_uniform(self) -> None:
        """Test that the Jacobian repeats Φ at every point."""
        flow = beam.beam_flow()
        jac = flow.jacobian(0.4, np.zeros((2, 3)), 0.0)
        assert jac.shape == (2, 2, 3)
        np.testing.assert_allclose(jac[:, :, 2], beam.rotation(0.4))
        np.testing.assert_allclose(flow.uniform_jacobian(0.4, 0.0), beam.rotation(0.4))

    def test_flow_jacobian_dispatches_to_the_flow(self, plane: TensorGrid) -> None:
        """Test the closed-form and variational Jacobians of the beam rotation."""
        points = plane.coordinates()[:, :5]
        closed = flow_jacobian(beam.beam_flow(), 1.1, points, 0.0)
        numeric = NumericFlow(2, 2.0 * math.pi, beam.fast_field, beam.fast_field_gradient)
        np.testing.assert_allclose(closed[:, :, 0], beam.rotation(1.1))
        np.testing.assert_allclose(flow_jacobian(numeric, 1.1, points, 0.0), closed, atol=1e-6)

    def test_linear_flow_is_time_independent(self) -> None:
        """Test that ∂_t X vanishes for autonomous flows."""
        flow = flr.flr_flow()
        assert flow.t_independent
        assert not np.any(flow.dt(1.0, np.ones((4, 2)), 0.3))

    def test_numeric_flow_matches_analytic(self, plane: TensorGrid) -> None:
        """Test Runge–Kutta and closed-form beam flows against each other."""
        numeric = NumericFlow(2, 2.0 * math.pi, beam.fast_field, beam.fast_field_gradient)
        assert numeric.kind is FlowKind.NUMERIC
        sample = sample_flow_points(plane, count=20)
        assert compare_flows(beam.beam_flow(), numeric, sample) < 1e-6

    def test_non_positive_period_rejected(self) -> None:
        """Test that θ must be positive."""
        with pytest.raises(InputError, match="positive"):
            LinearFlow(2, 0.0, beam.rotation)

    def test_numeric_flow_rejects_bad_time_step(self) -> None:
        """Test that the ∂_t difference step must be positive."""
        with pytest.raises(InputError, match="h_t"):
            NumericFlow(2, 1.0, beam.fast_field, h_t=0.0)

    def test_default_time_step_follows_the_horizon(self) -> None:
        """Test that h_t defaults to a fixed fraction of the horizon."""
        assert NumericFlow(2, 1.0, beam.fast_field, horizon=2.0).h_t == pytest.approx(2e-4)
        assert NumericFlow(2, 1.0, beam.fast_field, h_t=1e-3, horizon=5.0).h_t == 1e-3
        with pytest.raises(InputError, match="horizon"):
            NumericFlow(2, 1.0, beam.fast_field, horizon=0.0)

    def test_numeric_time_derivative_is_second_order(self) -> None:
        """Test the central difference ∂_tX on the flow of (1 + t)·(v, −r)."""

        def speeding(t: float, tau: float, points: np.ndarray) -> np.ndarray:
            return (1.0 + t) * beam.fast_field(t, tau, points)

        flow = NumericFlow(2, 2.0 * math.pi, speeding, substeps_per_unit=256)
        points = np.array([[1.0, -0.5], [0.5, 2.0]])
        tau, t = 1.0, 0.3
        phase = (1.0 + t) * tau
        turn = np.array([[-math.sin(phase), math.cos(phase)], [-math.cos(phase), -math.sin(phase)]])
        exact = tau * turn @ points
        steps = [0.2, 0.1, 0.05]
        errors = [
            float(np.max(np.abs(flow_dt(flow, tau, points, t, 0.0, h) - exact))) for h in steps
        ]
        order = float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
        assert order >= 1.9


class TestDiagnostics:
    """Tests for flow residual checks."""

    def test_sample_is_reproducible(self, plane: TensorGrid) -> None:
        """Test that the same seed gives the same points inside the shrunk box."""
        first = sample_flow_points(plane, count=10, seed=3)
        second = sample_flow_points(plane, count=10, seed=3)
        np.testing.assert_array_equal(first.points, second.points)
        assert np.all(np.abs(first.points) <= 0.8 * 3.0)
        assert first.taus[0] == 0.0
        assert first.taus[-1] == pytest.approx(2.0 * math.pi)

    def test_rotation_residuals(self, plane: TensorGrid) -> None:
        """Test closure, volume, inverse and group residuals of the beam flow."""
        flow = beam.beam_flow()
        sample = sample_flow_points(plane)
        assert check_periodicity(flow, sample) == 0.0
        assert check_volume(flow, sample) < 1e-12
        assert check_inverse(flow, sample) < 1e-12
        assert check_group(flow, sample) < 1e-12

    def test_larmor_flow_preserves_volume(self) -> None:
        """Test the unit Jacobian determinant of the FLR flow."""
        grid = TensorGrid.uniform(4, -2.0, 2.0, 8)
        sample = sample_flow_points(grid, count=12)
        assert check_volume(flr.flr_flow(), sample) < 1e-12
        assert check_periodicity(flr.flr_flow(), sample) == 0.0

    def test_require_periodic_refuses_open_flow(self, plane: TensorGrid) -> None:
        """Test that a drifting flow is refused with a ConfigurationError."""

        def shift(tau: float, points: np.ndarray, t: float, sigma: float) -> np.ndarray:
            return points + (tau - sigma)

        def unit(tau: float, points: np.ndarray, t: float, sigma: float) -> np.ndarray:
            return np.repeat(np.eye(2)[:, :, None], points.shape[1], axis=2)

        drifting = AnalyticFlow(2, 2.0 * math.pi, shift, unit)
        sample = sample_flow_points(plane, count=5)
        with pytest.raises(ConfigurationError, match="not 6.28319-periodic"):
            require_periodic(drifting, sample, 1e-6)

    def test_require_periodic_returns_residual(self, plane: TensorGrid) -> None:
        """Test that a closing flow passes and reports its residual."""
        sample = sample_flow_points(plane, count=5)
        assert require_periodic(beam.beam_flow(), sample, 1e-12) == 0.0
