import logging
import math

import numpy as np
from django.conf import settings
from scipy.special import eval_jacobi, gammaln

from apps.measure.models import RadialSet, mu_constant
from apps.transform.models import BandProfile, composite_gauss_legendre
from apps.transform.transform import apply_kernel

logger = logging.getLogger(__name__)

BUBBLE_WEIGHT = 2


def _jacobi_norm(k: int) -> float:
    a = b = BUBBLE_WEIGHT
    log_h = (
        (a + b + 1) * math.log(2.0)
        - math.log(2 * k + a + b + 1)
        + gammaln(k + a + 1)
        + gammaln(k + b + 1)
        - gammaln(k + a + b + 1)
        - gammaln(k + 1)
    )
    return math.exp(0.5 * log_h)


def bubble_values(band_dim: int, x):
    """(1 - x^2) P_k^{(2,2)}(x), normalized in L2(-1, 1), one column per k."""
    x = np.asarray(x, dtype=float)
    columns = [(1.0 - x**2) * eval_jacobi(k, BUBBLE_WEIGHT, BUBBLE_WEIGHT, x) / _jacobi_norm(k) for k in range(band_dim)]
    return np.stack(columns, axis=1)


class BandBasis:
    """Orthonormal spectral basis of the bands in L2(mu_alpha), sampled on a fine band quadrature.

    Basis function k of band b is the bubble polynomial on that band divided by
    sqrt(c_a y^{2a+1} / 2); it vanishes at both band edges.
    """

    def __init__(self, alpha: float, bands, band_dim: int, fine_dim: int):
        self.alpha = float(alpha)
        self.bands = list(bands)
        self.band_dim = int(band_dim)
        self.profile = BandProfile(self.alpha, self.bands, max(int(fine_dim), self.band_dim + 8))
        fine = self.profile.band_dim
        x = np.tile(np.polynomial.legendre.leggauss(fine)[0], len(self.bands))
        lift = np.sqrt(2.0 / (mu_constant(self.alpha) * self.profile.nodes ** (2.0 * self.alpha + 1.0)))
        local = bubble_values(self.band_dim, x) * lift[:, None]
        self.values = np.zeros((len(self.profile.nodes), self.dimension))
        for index in range(len(self.bands)):
            rows = slice(index * fine, (index + 1) * fine)
            cols = slice(index * self.band_dim, (index + 1) * self.band_dim)
            self.values[rows, cols] = local[rows]

    @property
    def dimension(self) -> int:
        return self.band_dim * len(self.bands)

    @property
    def nodes(self):
        return self.profile.nodes

    @property
    def weights(self):
        return self.profile.weights

    def gram(self):
        """Band Gram matrix A; the identity up to rounding."""
        return self.values.T @ (self.weights[:, None] * self.values)

    def coefficients(self):
        return self.weights[:, None] * self.values


class PartitionedGrid:
    """mu_alpha quadrature on [0, t_max] whose panels never straddle an endpoint of E."""

    def __init__(self, alpha: float, E: RadialSet, t_max: float, max_freq: float, nodes_per_panel: int | None = None):
        self.alpha = float(alpha)
        self.t_max = float(t_max)
        nodes_per_panel = nodes_per_panel or settings.LAB_NODES_PER_PANEL
        width = min(1.0, 1.0 / (4.0 * max_freq))
        edges = sorted({0.0, self.t_max, *(p for piece in E.pieces(0.0, self.t_max) for p in piece)})
        nodes, weights, inside = [], [], []
        for lo, hi in zip(edges, edges[1:]):
            if hi - lo <= 1e-14:
                continue
            t, w = composite_gauss_legendre(lo, hi, width, nodes_per_panel)
            nodes.append(t)
            weights.append(w)
            inside.append(np.full(len(t), bool(E.indicator(0.5 * (lo + hi)))))
        self.nodes = np.concatenate(nodes)
        self.weights = np.concatenate(weights) * mu_constant(self.alpha) * self.nodes ** (2.0 * self.alpha + 1.0)
        self.inside = np.concatenate(inside)
        self.segments = len(nodes)
        logger.debug(f"Partitioned grid on [0, {t_max}]: {self.segments} segments, {len(self.nodes)} nodes")

    def __len__(self):
        return len(self.nodes)


def concentration_matrices(basis: BandBasis, grid: PartitionedGrid, chunk: int | None = None):
    """Gram matrices of the synthesized basis over [0, t_max], over E within it and over [t_max/2, t_max]."""
    chunk = chunk or settings.LAB_KERNEL_CHUNK
    coeffs = basis.coefficients()
    full = np.zeros((basis.dimension, basis.dimension))
    restricted = np.zeros_like(full)
    outer = np.zeros_like(full)
    for start in range(0, len(grid), chunk):
        stop = min(start + chunk, len(grid))
        columns = apply_kernel(basis.alpha, grid.nodes[start:stop], basis.nodes, coeffs, chunk=chunk)
        weighted = grid.weights[start:stop, None] * columns
        full += columns.T @ weighted
        inside = grid.inside[start:stop]
        if np.any(inside):
            restricted += columns[inside].T @ weighted[inside]
        last = grid.nodes[start:stop] >= 0.5 * grid.t_max
        if np.any(last):
            outer += columns[last].T @ weighted[last]
    return full, restricted, outer
