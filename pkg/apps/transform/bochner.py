import logging
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_legendre

from apps.kernels.models import BesselOrder, InvalidOrderError
from apps.measure.models import mu_constant
from apps.transform.models import BochnerReduction, RadialGrid, TransformError, composite_gauss_legendre

logger = logging.getLogger(__name__)

VANISHING_POINTS = (1e-2, 1e-4, 1e-6)
RADIAL_EXTENT = 10.0


def bochner_reduce(n: int, k: int, F) -> BochnerReduction:
    """Order mapping for F(|x|) Y_k(x/|x|) on R^n: alpha = n/2 + k - 1, g(r) = r^{-k} F(r)."""
    if n < 1 or k < 0 or int(n) != n or int(k) != k:
        raise TransformError(f"need integers n >= 1 and k >= 0, got n={n}, k={k}")
    alpha_eff = n / 2.0 + k - 1.0
    try:
        BesselOrder(alpha_eff)
    except InvalidOrderError as e:
        raise TransformError(f"n={n}, k={k} maps to alpha={alpha_eff}, outside alpha > -1/2") from e

    def g(r):
        r = np.asarray(r, dtype=float)
        return np.asarray(F(r)) * r ** (-float(k))

    if k > 0:
        samples = np.abs(g(np.asarray(VANISHING_POINTS)))
        if not samples[-1] <= 10.0 * max(samples[0], samples[1]) + 1e-300:
            raise TransformError(f"F does not vanish to order {k} at the origin: |F(r)| r^-k = {samples.tolist()}")
    return BochnerReduction(alpha_eff=alpha_eff, g=g, norm_factor=1.0 / mu_constant(alpha_eff), n=int(n), k=int(k))


def spherical_norm_squared(n: int, k: int) -> float:
    """Squared L2(S^{n-1}) norm of the zonal harmonic: cos(k theta) on S^1, P_k(cos theta) on S^2."""
    if n == 2:
        return 2.0 * math.pi if k == 0 else math.pi
    if n == 3:
        return 4.0 * math.pi / (2 * k + 1)
    raise TransformError(f"zonal harmonics are provided for n in (2, 3), got n={n}")


def _zonal(n: int, k: int, unit):
    if n == 2:
        return np.real((unit[..., 0] + 1j * unit[..., 1]) ** k)
    return eval_legendre(k, unit[..., 2])


def direct_norm_squared(n: int, k: int, F, radial_nodes: int = 16, angular_nodes: int = 64) -> float:
    """Squared L2(R^n) norm of F(|x|) Y_k(x/|x|) by tensor quadrature in spherical coordinates."""
    r, wr = composite_gauss_legendre(0.0, RADIAL_EXTENT, 0.5, radial_nodes)
    u, wu = leggauss(angular_nodes)
    if n == 2:
        theta = math.pi * (u + 1.0)
        w_theta = math.pi * wu
        points = r[:, None, None] * np.stack((np.cos(theta), np.sin(theta)), axis=-1)[None, :, :]
        jacobian = r[:, None] * w_theta[None, :]
        weights = wr[:, None] * jacobian
    elif n == 3:
        theta = 0.5 * math.pi * (u + 1.0)
        phi = math.pi * (u + 1.0)
        w_theta, w_phi = 0.5 * math.pi * wu, math.pi * wu
        sin_t, cos_t = np.sin(theta), np.cos(theta)
        direction = np.stack(
            (
                sin_t[:, None] * np.cos(phi)[None, :],
                sin_t[:, None] * np.sin(phi)[None, :],
                np.broadcast_to(cos_t[:, None], (len(theta), len(phi))),
            ),
            axis=-1,
        )
        points = r[:, None, None, None] * direction[None]
        angular = (sin_t * w_theta)[:, None] * w_phi[None, :]
        weights = wr[:, None, None] * r[:, None, None] ** 2 * angular[None]
    else:
        raise TransformError(f"direct quadrature is provided for n in (2, 3), got n={n}")
    radius = np.linalg.norm(points, axis=-1)
    values = np.asarray(F(radius)) * _zonal(n, k, points / radius[..., None])
    return float(np.sum(weights * np.abs(values) ** 2))


def reduced_norm_squared(reduction: BochnerReduction, t_max: float = RADIAL_EXTENT) -> float:
    """Right side of the factorization: |Y_k|^2 * norm_factor * |g|^2 in L2_alpha."""
    grid = RadialGrid.build(reduction.alpha_eff, t_max, max_freq=2.0)
    g_norm = float(np.sum(grid.weights * np.abs(reduction.g(grid.nodes)) ** 2))
    return spherical_norm_squared(reduction.n, reduction.k) * reduction.norm_factor * g_norm
