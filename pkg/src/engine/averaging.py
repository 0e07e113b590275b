"""Pulled-back and averaged fields α_i, ã_i and a_i.

α_0 = (∇_x X)⁻¹(𝒜_0(t, τ, X) − ∂_t X) and α_i = (∇_x X)⁻¹ 𝒜_i(t, τ, X) for
i ≥ 1, all evaluated along X = X(τ; x, t; 0). ã_i is their τ-average and a_i
their push-forward along X(−τ; x, t; 0). Jacobians are never inverted
explicitly; every application of (∇_x X)⁻¹ is a linear solve guarded by the
determinant.
"""

import numpy as np

from src.engine.expansion import TwoScaleProblem
from src.errors import DegenerateFlowError
from src.flow.flow_map import FlowMap
from src.numerics.grid import FloatArray

DEFAULT_DET_GUARD = 0.5


def solve_jacobian(
    flow: FlowMap,
    tau: float,
    points: FloatArray,
    t: float,
    rhs: FloatArray,
    det_guard: float = DEFAULT_DET_GUARD,
) -> FloatArray:
    """Solve (∇_x X)(τ; x, t; 0) y = rhs point by point.

    Args:
        flow: Characteristic flow
        tau: Fast time of the Jacobian
        points: Base points x of shape (dims, P)
        t: Slow time
        rhs: Right-hand sides of shape (dims, P)
        det_guard: Largest accepted |det ∇_x X − 1|

    Returns:
        Solutions of shape (dims, P)

    Raises:
        DegenerateFlowError: If the determinant leaves 1 ± det_guard
    """
    uniform = flow.uniform_jacobian(tau, t)
    if uniform is not None:
        det = float(np.linalg.det(uniform))
        if abs(det - 1.0) > det_guard:
            location = tuple(float(v) for v in points[:, 0])
            raise DegenerateFlowError(
                f"flow Jacobian determinant {det:.3e} at τ={tau:.6g}", location, det
            )
        return np.asarray(np.linalg.solve(uniform, rhs))
    jac = np.moveaxis(flow.jacobian(tau, points, t), -1, 0)
    dets = np.linalg.det(jac)
    bad = np.abs(dets - 1.0) > det_guard
    if np.any(bad):
        index = int(np.argmax(bad))
        location = tuple(float(v) for v in points[:, index])
        raise DegenerateFlowError(
            f"flow Jacobian determinant {dets[index]:.3e} at τ={tau:.6g}, x={location}",
            location,
            float(dets[index]),
        )
    return np.asarray(np.linalg.solve(jac, rhs.T[:, :, None])[:, :, 0].T)


def alpha(
    i: int,
    t: float,
    tau: float,
    points: FloatArray,
    problem: TwoScaleProblem,
    det_guard: float = DEFAULT_DET_GUARD,
) -> FloatArray:
    """Return α_i(t, τ, x) for points of shape (dims, P).

    Raises:
        DegenerateFlowError: If the flow Jacobian is degenerate
    """
    flow = problem.flow
    expansion = problem.expansion
    if expansion.is_zero(i) and (i > 0 or flow.t_independent):
        return np.zeros_like(points, dtype=np.float64)
    image = flow.evaluate(tau, points, t)
    rhs = expansion.evaluate(i, t, tau, image)
    if i == 0:
        rhs = rhs - flow.dt(tau, points, t)
    return solve_jacobian(flow, tau, points, t, rhs, det_guard)


def alpha_samples(
    i: int,
    t: float,
    points: FloatArray,
    problem: TwoScaleProblem,
    det_guard: float = DEFAULT_DET_GUARD,
) -> FloatArray:
    """Return α_i at every τ node, shape (tau_points, dims, P)."""
    grid = problem.grid
    if problem.expansion.is_zero(i) and i > 0:
        return np.zeros((grid.tau_points, *points.shape))
    return np.stack([alpha(i, t, tau, points, problem, det_guard) for tau in grid.tau_nodes()])


def a_tilde(
    i: int,
    t: float,
    points: FloatArray,
    problem: TwoScaleProblem,
    det_guard: float = DEFAULT_DET_GUARD,
) -> FloatArray:
    """Return ã_i(t, x) = (1/θ)∫₀^θ α_i(t, τ, x) dτ by the periodic trapezoid rule."""
    return np.asarray(np.mean(alpha_samples(i, t, points, problem, det_guard), axis=0))


def a_field(
    i: int,
    t: float,
    tau: float,
    points: FloatArray,
    problem: TwoScaleProblem,
    det_guard: float = DEFAULT_DET_GUARD,
) -> FloatArray:
    """Return a_i(t, τ, x), the average ã_i pushed forward along the fast flow.

    a_0 = ((∇_xX)(−τ))⁻¹(ã_0(t, X(−τ)) − ∂_tX(−τ)) and, for i ≥ 1,
    a_i = ((∇_xX)(−τ))⁻¹ ã_i(t, X(−τ)) with X(−τ) = X(−τ; x, t; 0).
    """
    flow = problem.flow
    back = flow.evaluate(-tau, points, t)
    averaged = a_tilde(i, t, back, problem, det_guard)
    if i == 0:
        averaged = averaged - flow.dt(-tau, points, t)
    return solve_jacobian(flow, -tau, points, t, averaged, det_guard)
