import logging
import math

import numpy as np
from django.conf import settings
from scipy.optimize import minimize_scalar

from apps.measure.models import DensityReport, MeasureError, RadialSet, mu_primitive

logger = logging.getLogger(__name__)


def _check_alpha(alpha: float):
    if not alpha > -0.5:
        raise MeasureError(f"alpha must satisfy alpha > -1/2, got {alpha}")


def mu_alpha_interval(alpha: float, a: float, b: float) -> float:
    """mu_alpha([a, b]) = c_a (b^{2a+2} - a^{2a+2}) / (2a+2)."""
    _check_alpha(alpha)
    if a < 0 or b < a:
        raise MeasureError(f"interval [{a}, {b}] must satisfy 0 <= a <= b")
    return float(mu_primitive(alpha, b) - mu_primitive(alpha, a))


def density_conversion_bound(alpha: float, gamma: float) -> float:
    """Lower bound on the mu_alpha density of a set with Lebesgue density gamma."""
    if not 0.0 < gamma <= 1.0:
        raise MeasureError(f"gamma must lie in (0, 1], got {gamma}")
    half = gamma / 2.0
    return half * (half / (half + 1.0)) ** (2.0 * alpha + 1.0)


def _scan_range(E: RadialSet, window: float) -> tuple[float, float]:
    if not window > 0:
        raise MeasureError(f"window must be positive, got {window}")
    if E.is_empty:
        raise MeasureError("density of an empty interval list is undefined")
    end = E.t_max - window
    if end < 0:
        raise MeasureError(f"window {window} exceeds t_max {E.t_max}")
    return 0.0, end


def lebesgue_density(E: RadialSet, window: float | None = None) -> DensityReport:
    """Exact infimum of |E cap [r, r+w]| / w.

    The window measure is piecewise linear in r with breakpoints at the interval
    endpoints and the endpoints shifted by -w, so scanning those is exact.
    """
    window = float(settings.LAB_WINDOW if window is None else window)
    lo, hi = _scan_range(E, window)
    endpoints = np.asarray(E.intervals, dtype=float).ravel()
    candidates = np.concatenate((endpoints, endpoints - window))
    if E.is_periodic:
        hi = min(hi, E.period)
        candidates = np.mod(candidates, E.period)
    candidates = np.concatenate((candidates[(candidates >= lo) & (candidates <= hi)], [lo, hi]))
    values = E.lebesgue(candidates, candidates + window) / window
    best = int(np.argmin(values))
    report = DensityReport(window=window, gamma_lebesgue=float(np.clip(values[best], 0.0, 1.0)), argmin_r=float(candidates[best]))
    logger.debug(f"Lebesgue density of {E}: {report.gamma_lebesgue:.6f} at r={report.argmin_r:.6f}")
    return report


def mu_density(alpha: float, E: RadialSet, window: float | None = None) -> DensityReport:
    """Grid infimum of mu(E cap [r, r+w]) / mu([r, r+w]) with one bounded refinement.

    The reported value is an upper bound on the true infimum, accurate to the grid resolution.
    """
    _check_alpha(alpha)
    window = float(settings.LAB_WINDOW if window is None else window)
    lo, hi = _scan_range(E, window)
    step = window / settings.LAB_DENSITY_GRID
    r = np.linspace(lo, hi, int(math.ceil((hi - lo) / step)) + 1)

    def ratio(points):
        points = np.asarray(points, dtype=float)
        full = mu_primitive(alpha, points + window) - mu_primitive(alpha, points)
        return E.mu(alpha, points, points + window) / full

    values = ratio(r)
    best = int(np.argmin(values))
    gamma_mu, argmin = float(values[best]), float(r[best])
    if len(r) > 1:
        spacing = r[1] - r[0]
        bounds = (max(lo, argmin - spacing), min(hi, argmin + spacing))
        refined = minimize_scalar(lambda point: float(ratio(point)), bounds=bounds, method="bounded", options={"xatol": 1e-10})
        if refined.success and refined.fun < gamma_mu:
            gamma_mu, argmin = float(refined.fun), float(refined.x)
    report = DensityReport(window=window, gamma_mu=float(np.clip(gamma_mu, 0.0, 1.0)), argmin_r_mu=argmin, alpha=alpha)
    logger.debug(f"mu_{alpha} density of {E}: {report.gamma_mu:.6f} at r={argmin:.6f}")
    return report


def density_report(alpha: float, E: RadialSet, window: float | None = None) -> DensityReport:
    return lebesgue_density(E, window).merge(mu_density(alpha, E, window))
