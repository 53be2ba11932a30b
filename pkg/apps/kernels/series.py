import logging

import mpmath
import numpy as np
from django.conf import settings

from apps.kernels.models import (
    BesselOrder,
    KernelConvergenceError,
    KernelError,
    SeriesRadiusError,
)

logger = logging.getLogger(__name__)

MAX_SERIES_TERMS = 600


def _as_order(order) -> BesselOrder:
    return order if isinstance(order, BesselOrder) else BesselOrder(order)


def series_terms(order, x, tol: float = 1e-17, with_magnitude: bool = False):
    """Sum Gamma(a+1) sum_n (-1)^n (x/2)^{2n} / (n! Gamma(n+a+1)) by the term recurrence.

    No radius check; callers decide whether cancellation is acceptable.
    """
    order = _as_order(order)
    x = np.asarray(x, dtype=float)
    quarter = -(x / 2.0) ** 2
    term = np.ones_like(x)
    total = np.ones_like(x)
    magnitude = np.ones_like(x)
    alpha = order.alpha
    for n in range(MAX_SERIES_TERMS):
        term = term * quarter / ((n + 1.0) * (n + alpha + 1.0))
        total = total + term
        magnitude = magnitude + np.abs(term)
        # terms grow until n ~ x/2, so only stop on the decreasing side
        if n + 1 > np.max(np.abs(x)) / 2.0 and np.all(np.abs(term) <= tol * np.maximum(magnitude, 1e-300)):
            break
    else:
        raise KernelConvergenceError(f"series for {order} did not converge within {MAX_SERIES_TERMS} terms")
    if with_magnitude:
        return total, magnitude
    return total


def j_series(order, x, tol: float = 1e-16):
    order = _as_order(order)
    if not tol > 0:
        raise KernelError(f"tol must be positive, got {tol}")
    x_arr = np.abs(np.asarray(x, dtype=float))
    if np.any(x_arr > order.reliability_radius):
        raise SeriesRadiusError(
            f"x={float(np.max(x_arr)):.6g} exceeds the series reliability radius "
            f"{order.reliability_radius:.6g} for {order}"
        )
    value = series_terms(order, x_arr, tol=tol)
    if np.ndim(x) == 0:
        return float(value)
    return value


def j_reference(order, x, dps: int | None = None):
    """Extended-precision oracle j_alpha(x) = 0F1(; alpha+1; -x^2/4)."""
    order = _as_order(order)
    dps = dps or settings.LAB_ORACLE_DPS
    alpha = mpmath.mpf(order.alpha)
    values = []
    with mpmath.workdps(dps):
        for point in np.atleast_1d(np.asarray(x, dtype=float)):
            xm = mpmath.mpf(float(point))
            values.append(float(mpmath.hyp0f1(alpha + 1, -(xm**2) / 4)))
    if np.ndim(x) == 0:
        return values[0]
    return np.asarray(values)
