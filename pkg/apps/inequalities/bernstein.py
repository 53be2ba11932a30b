import logging
import math

import numpy as np
from scipy.special import poch

from apps.inequalities.models import BernsteinResult, InequalityError, QuadratureConvergenceError
from apps.transform.models import BandProfile, RadialGrid
from apps.transform.transform import apply_kernel

logger = logging.getLogger(__name__)

MAX_DERIVATIVE = 4
DEFAULT_T_MAX = 80.0
PLANCHEREL_TOLERANCE = 1e-6


def _check(profile: BandProfile, R: float, k: int):
    if int(k) != k or not 0 <= k <= MAX_DERIVATIVE:
        raise InequalityError(f"derivative order must be an integer in [0, {MAX_DERIVATIVE}], got {k}")
    if not R > 0 or profile.max_frequency > R + 1e-12:
        raise InequalityError(f"bands {profile.bands} do not lie in [0, {R}]")
    if profile.is_zero():
        raise InequalityError("the Bernstein ratio of a zero profile is undefined")


def bernstein_spectral_ratio(alpha: float, profile: BandProfile, R: float, k: int) -> float:
    """Closed form int |F|^2 (y/R)^{2k} dmu / int |F|^2 dmu of the derivative ratio."""
    _check(profile, R, k)
    if abs(profile.alpha - alpha) > 1e-15:
        raise InequalityError(f"profile alpha={profile.alpha} differs from alpha={alpha}")
    energy = profile.weights * np.abs(profile.samples) ** 2
    return float(np.sum(energy * (profile.nodes / R) ** (2 * k)) / np.sum(energy))


def derivative_coefficients(profile: BandProfile, k: int):
    """Band weights times F(y) (-pi^2 y^2)^k / (alpha+1)_k, the order alpha+k synthesis coefficients of g^(k)."""
    factor = (-(math.pi**2) * profile.nodes**2) ** k / poch(profile.alpha + 1.0, k)
    return profile.weights * profile.samples * factor


def bernstein_ratio(
    alpha: float, profile: BandProfile, R: float, k: int, t_max: float = DEFAULT_T_MAX
) -> BernsteinResult:
    """int |g^(k)(s)|^2 s^{a+k} ds / ((pi R)^{2k} int |g(s)|^2 s^a ds) for g(s) = f(sqrt(s)).

    g^(k)(s) is the order alpha+k synthesis of the coefficients above at t = sqrt(s),
    and both integrals are taken in t after s = t^2.
    """
    _check(profile, R, k)
    if abs(profile.alpha - alpha) > 1e-15:
        raise InequalityError(f"profile alpha={profile.alpha} differs from alpha={alpha}")
    fine = profile.resolving(t_max)
    grid = RadialGrid.build(alpha, t_max, max_freq=max(R, 1.0))
    f = apply_kernel(alpha, grid.nodes, fine.nodes, fine.weights * fine.samples)
    denominator = float(np.sum(grid.weights * np.abs(f) ** 2))
    spectral = fine.norm_squared()
    gap = abs(denominator - spectral) / spectral
    if gap > PLANCHEREL_TOLERANCE:
        raise QuadratureConvergenceError(
            f"synthesis up to t={t_max} keeps only {denominator / spectral:.8f} of the energy; raise t_max"
        )
    g_k = apply_kernel(alpha + k, grid.nodes, fine.nodes, derivative_coefficients(fine, k))
    numerator = float(np.sum(grid.weights * grid.nodes ** (2 * k) * np.abs(g_k) ** 2))
    ratio = numerator / ((math.pi * R) ** (2 * k) * denominator)
    result = BernsteinResult(
        alpha=float(alpha),
        R=float(R),
        k=int(k),
        ratio=ratio,
        spectral_ratio=bernstein_spectral_ratio(alpha, fine, R, k),
        t_max=float(t_max),
        plancherel_gap=gap,
    )
    logger.debug(f"Bernstein ratio alpha={alpha}, R={R}, k={k}: {ratio:.8f} (spectral {result.spectral_ratio:.8f})")
    return result


def bump_profile(alpha: float, band, center: float | None = None, width: float = 1.0, coeffs=None, band_dim: int = 64):
    """Smooth bump of the given width inside a unit band, optionally modulated by a Legendre series."""
    lo = float(band[0])
    center = lo + 0.5 if center is None else float(center)
    half = 0.5 * width
    if center - half < lo - 1e-12 or center + half > lo + 1.0 + 1e-12:
        raise InequalityError(f"bump [{center - half}, {center + half}] leaves the band [{lo}, {lo + 1.0}]")
    coeffs = np.asarray([1.0] if coeffs is None else coeffs, dtype=complex)

    def g(y):
        u = (np.asarray(y, dtype=float) - center) / half
        inside = np.abs(u) < 1.0
        out = np.zeros(u.shape, dtype=complex)
        out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2)) * np.polynomial.legendre.legval(u[inside], coeffs)
        return out

    return BandProfile.from_callable(alpha, [(lo, lo + 1.0)], g, band_dim)
