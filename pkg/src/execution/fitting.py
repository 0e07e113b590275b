"""Observed convergence order from errors over an ε sweep."""

import logging
from collections.abc import Sequence

import numpy as np

from src.models.report import SlopeFit

logger = logging.getLogger(__name__)

MIN_R_SQUARED = 0.98
MIN_POINTS = 4


def _fit(log_eps: np.ndarray, log_err: np.ndarray, dropped: bool) -> SlopeFit:
    slope, intercept = np.polyfit(log_eps, log_err, 1)
    predicted = slope * log_eps + intercept
    residual = float(np.sum((log_err - predicted) ** 2))
    total = float(np.sum((log_err - np.mean(log_err)) ** 2))
    if total > 0.0:
        r_squared = 1.0 - residual / total
    else:
        r_squared = 1.0 if residual == 0.0 else 0.0
    points = len(log_eps)
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        points=points,
        reliable=r_squared >= MIN_R_SQUARED and points >= MIN_POINTS,
        dropped_largest=dropped,
    )


def fit_slope(eps: Sequence[float], errors: Sequence[float]) -> SlopeFit | None:
    """Fit log e = s·log ε + c by least squares.

    Non-positive or non-finite errors are skipped. When R² < 0.98 the largest
    ε is dropped and the fit is retried once.

    Args:
        eps: ε values
        errors: Errors e(ε), same length

    Returns:
        The fit, or None when fewer than two usable points remain

    Raises:
        ValueError: If the sequences differ in length
    """
    if len(eps) != len(errors):
        raise ValueError(f"got {len(eps)} eps values but {len(errors)} errors")
    usable = [
        (float(x), float(e)) for x, e in zip(eps, errors, strict=True) if e > 0 and np.isfinite(e)
    ]
    pairs = sorted(usable, reverse=True)
    if len(pairs) < 2:
        return None
    log_eps = np.log(np.array([x for x, _ in pairs]))
    log_err = np.log(np.array([e for _, e in pairs]))
    fit = _fit(log_eps, log_err, dropped=False)
    if fit.r_squared < MIN_R_SQUARED and len(pairs) > 2:
        logger.debug(
            "R²=%.4f below %.2f; refitting without eps=%g",
            fit.r_squared,
            MIN_R_SQUARED,
            pairs[0][0],
        )
        fit = _fit(log_eps[1:], log_err[1:], dropped=True)
    return fit
