import logging

import numpy as np
from django.conf import settings

from apps.kernels.evaluation import j_eval
from apps.transform.models import (
    BandProfile,
    RadialFunction,
    RadialGrid,
    TransformError,
    UnderResolvedError,
)

logger = logging.getLogger(__name__)


def apply_kernel(alpha: float, t_nodes, y_nodes, coeffs, chunk: int | None = None):
    """out[t] = sum_p coeffs[p] j_a(2 pi t y_p), evaluated in row blocks.

    coeffs may be a vector or a matrix with one column per output series.
    """
    t_nodes = np.asarray(t_nodes, dtype=float)
    y_nodes = np.asarray(y_nodes, dtype=float)
    coeffs = np.asarray(coeffs)
    chunk = chunk or settings.LAB_KERNEL_CHUNK
    dtype = np.result_type(coeffs.dtype, float)
    out = np.zeros((len(t_nodes),) + coeffs.shape[1:], dtype=dtype)
    for start in range(0, len(t_nodes), chunk):
        stop = min(start + chunk, len(t_nodes))
        kernel = j_eval(alpha, 2.0 * np.pi * t_nodes[start:stop, None] * y_nodes[None, :])
        out[start:stop] = kernel @ coeffs
    return out


def forward(alpha: float, f: RadialFunction, freqs):
    """F_a f(y) = int f(x) j_a(2 pi x y) dmu_a(x) by the grid quadrature."""
    freqs = np.asarray(freqs, dtype=float)
    if np.any(freqs < 0):
        raise TransformError("frequencies must be nonnegative")
    if abs(alpha - f.grid.alpha) > 1e-15:
        raise TransformError(f"grid was built for alpha={f.grid.alpha}, not {alpha}")
    if freqs.size:
        f.grid.require_resolution(float(np.max(freqs)))
    return apply_kernel(alpha, freqs, f.grid.nodes, f.grid.weights * f.values)


def synthesize_bandlimited(profile: BandProfile, grid: RadialGrid) -> RadialFunction:
    """f(t) = sum over band nodes of weight * g * j_a(2 pi t y)."""
    if abs(profile.alpha - grid.alpha) > 1e-15:
        raise TransformError(f"profile alpha={profile.alpha} differs from grid alpha={grid.alpha}")
    grid.require_resolution(profile.max_frequency)
    needed = BandProfile.required_band_dim(grid.t_max)
    if profile.band_dim < needed:
        raise UnderResolvedError(f"{profile} resolves kernels up to t={grid.t_max} only with {needed} nodes per band")
    values = apply_kernel(profile.alpha, grid.nodes, profile.nodes, profile.weights * profile.samples)
    return RadialFunction(grid=grid, values=values)


def plancherel_residual(profile: BandProfile, grid: RadialGrid) -> float:
    """Relative gap between the grid norm of the synthesis and the band norm of the profile."""
    if profile.is_zero():
        raise TransformError("Plancherel residual of a zero profile is undefined")
    spectral = profile.norm_squared()
    spatial = synthesize_bandlimited(profile, grid).norm_squared()
    residual = abs(spatial - spectral) / spectral
    logger.debug(f"Plancherel residual for {profile} with t_max={grid.t_max}: {residual:.3e}")
    return residual
