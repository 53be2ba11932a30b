import logging
import math
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammaln, ive, jv

from apps.kernels.decomposition import decompose_exponentials
from apps.kernels.models import BesselOrder, KernelError
from apps.kernels.series import _as_order, series_terms

logger = logging.getLogger(__name__)

SEAM_TOLERANCE = 1e-12


@lru_cache(maxsize=256)
def seam_point(alpha: float) -> float:
    """Largest x where double-precision round-off of the series stays below
    SEAM_TOLERANCE times the kernel envelope A x^{-a-1/2}.

    The absolute-term sum of the series is Gamma(a+1)(x/2)^{-a} I_a(x).
    """
    order = BesselOrder(alpha)
    log_eps = math.log(np.finfo(float).eps)

    def excess(x):
        log_magnitude = gammaln(order.alpha + 1.0) - order.alpha * math.log(x / 2.0) + math.log(ive(order.alpha, x)) + x
        log_target = math.log(SEAM_TOLERANCE * order.A_alpha) - (order.alpha + 0.5) * math.log(x)
        return log_eps + log_magnitude - log_target

    radius = order.reliability_radius
    if excess(radius) <= 0:
        return radius
    x0 = brentq(excess, 1e-3, radius, xtol=1e-12)
    logger.debug(f"Dispatch seam for alpha={alpha}: x0={x0:.6f}")
    return float(x0)


def _half_integer_tail(order: BesselOrder, s):
    decomposition = decompose_exponentials(order.m)
    cos_s, sin_s = np.cos(s), np.sin(s)
    total = np.zeros_like(s)
    for j in range(order.m, 2 * order.m + 1):
        c = decomposition.coeffs[("+", j)]
        # the "-" term is the conjugate of the "+" term
        total += 2.0 * (c.real * cos_s - c.imag * sin_s) * s ** (-j - 1.0)
    return total


def _general_tail(order: BesselOrder, x):
    return np.exp(gammaln(order.alpha + 1.0) + order.alpha * np.log(2.0 / x)) * jv(order.alpha, x)


def j_eval(order, x):
    """j_alpha(x) for any x, series below the seam, exact tail above it."""
    order = _as_order(order)
    x_arr = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x_arr)
    x0 = seam_point(order.alpha)
    low = x_arr <= x0
    if np.any(low):
        out[low] = series_terms(order, x_arr[low])
    high = ~low
    if np.any(high):
        tail = _half_integer_tail if order.is_half_integer else _general_tail
        out[high] = tail(order, x_arr[high])
    if np.ndim(x) == 0:
        return float(out)
    return out


def j_tilde(order, x):
    order = _as_order(order)
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise KernelError("the leading asymptotic term needs x > 0")
    value = order.A_alpha * x_arr ** (-order.alpha - 0.5) * np.cos(x_arr - order.delta)
    if np.ndim(x) == 0:
        return float(value)
    return value


def j_poisson(order, x) -> float:
    """Poisson integral Gamma(a+1)/(Gamma(a+1/2)Gamma(1/2)) int_{-1}^{1} (1-u^2)^{a-1/2} cos(xu) du."""
    order = _as_order(order)
    exponent = order.alpha - 0.5
    prefactor = math.exp(gammaln(order.alpha + 1.0) - gammaln(order.alpha + 0.5) - gammaln(0.5))
    value, error = quad(
        lambda u: math.cos(x * u),
        -1.0,
        1.0,
        weight="alg",
        wvar=(exponent, exponent),
        epsabs=1e-13,
        epsrel=1e-12,
        limit=max(100, int(4 * abs(x)) + 50),
    )
    logger.debug(f"Poisson integral for {order} at x={x}: quad error estimate {error:.2e}")
    return prefactor * value


def j_derivative(order, x):
    """d/dx j_a(x) = -x j_{a+1}(x) / (2(a+1))."""
    order = _as_order(order)
    x_arr = np.asarray(x, dtype=float)
    value = -x_arr * j_eval(order.shifted(1), x_arr) / (2.0 * (order.alpha + 1.0))
    if np.ndim(x) == 0:
        return float(value)
    return value
