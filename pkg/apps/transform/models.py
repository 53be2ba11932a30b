import csv
import io
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from django.conf import settings
from numpy.polynomial.legendre import leggauss

from apps.kernels.models import BesselOrder, ConvergenceError, LabError
from apps.measure.models import mu_constant

logger = logging.getLogger(__name__)

CSV_HEADER = ["node", "weight", "re", "im"]
MIN_NODES_PER_WAVELENGTH = 8


class TransformError(LabError):
    pass


class UnderResolvedError(TransformError, ConvergenceError):
    pass


def composite_gauss_legendre(lo: float, hi: float, panel_width: float, nodes_per_panel: int):
    """Composite Gauss-Legendre nodes and plain weights on [lo, hi]."""
    panels = max(1, int(math.ceil((hi - lo) / panel_width - 1e-12)))
    edges = np.linspace(lo, hi, panels + 1)
    x, w = leggauss(nodes_per_panel)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def write_columns(nodes, weights, values) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for node, weight, value in zip(nodes, weights, np.asarray(values, dtype=complex)):
        writer.writerow([repr(float(node)), repr(float(weight)), repr(float(value.real)), repr(float(value.imag))])
    return buffer.getvalue()


def read_columns(text: str):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != CSV_HEADER:
        raise TransformError(f"expected CSV header {CSV_HEADER}, got {header}")
    rows = [[float(cell) for cell in row] for row in reader if row]
    table = np.asarray(rows, dtype=float).reshape(-1, 4)
    return table[:, 0], table[:, 1], table[:, 2] + 1j * table[:, 3]


class RadialGrid:
    """Quadrature for the mu_alpha inner product on [0, t_max].

    Weights carry the density c_a x^{2a+1}; all nodes are interior.
    """

    def __init__(self, alpha: float, t_max: float, nodes, weights, panel_width: float, nodes_per_panel: int):
        self.alpha = float(alpha)
        self.t_max = float(t_max)
        self.nodes = np.asarray(nodes, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.panel_width = float(panel_width)
        self.nodes_per_panel = int(nodes_per_panel)
        if np.any(np.diff(self.nodes) <= 0) or np.any(self.weights <= 0):
            raise TransformError("grid nodes must increase strictly and weights must be positive")

    @classmethod
    def build(cls, alpha: float, t_max: float, max_freq: float = 1.0, nodes_per_panel: int | None = None, lo: float = 0.0):
        BesselOrder(alpha)
        if not t_max > lo:
            raise TransformError(f"t_max must exceed {lo}, got {t_max}")
        nodes_per_panel = nodes_per_panel or settings.LAB_NODES_PER_PANEL
        width = min(1.0, 1.0 / (4.0 * max_freq)) if max_freq > 0 else 1.0
        nodes, weights = composite_gauss_legendre(lo, t_max, width, nodes_per_panel)
        weights = weights * mu_constant(alpha) * nodes ** (2.0 * alpha + 1.0)
        grid = cls(alpha, t_max, nodes, weights, width, nodes_per_panel)
        logger.debug(f"Built radial grid: alpha={alpha}, t_max={t_max}, {len(nodes)} nodes, panel width {width:.4g}")
        return grid

    def __len__(self):
        return len(self.nodes)

    def nodes_per_wavelength(self, freq: float) -> float:
        if freq <= 0:
            return math.inf
        return self.nodes_per_panel / (self.panel_width * freq)

    def require_resolution(self, freq: float):
        density = self.nodes_per_wavelength(freq)
        if density < MIN_NODES_PER_WAVELENGTH:
            raise UnderResolvedError(
                f"grid has {density:.2f} nodes per wavelength at frequency {freq}; "
                f"need {MIN_NODES_PER_WAVELENGTH}"
            )

    def total_measure(self) -> float:
        return float(np.sum(self.weights))


@dataclass
class RadialFunction:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.nodes.shape:
            raise TransformError("one value per grid node is required")

    def norm_squared(self) -> float:
        return float(np.sum(self.grid.weights * np.abs(self.values) ** 2))

    def to_csv(self) -> str:
        return write_columns(self.grid.nodes, self.grid.weights, self.values)


class BandProfile:
    """Spectral samples g = F_a f on a union of disjoint unit bands."""

    def __init__(self, alpha: float, bands, band_dim: int, samples=None, source: Callable | None = None):
        BesselOrder(alpha)
        self.alpha = float(alpha)
        self.bands = sorted((float(lo), float(hi)) for lo, hi in bands)
        if not self.bands:
            raise TransformError("a band profile needs at least one band")
        for lo, hi in self.bands:
            if lo < 0 or abs(hi - lo - 1.0) > 1e-12:
                raise TransformError(f"band [{lo}, {hi}] must be a unit interval in [0, infinity)")
        for (_, hi), (lo, _) in zip(self.bands, self.bands[1:]):
            if lo < hi:
                raise TransformError(f"bands overlap near {lo}")
        self.band_dim = int(band_dim)
        x, w = leggauss(self.band_dim)
        starts = np.asarray([lo for lo, _ in self.bands])
        self.nodes = (starts[:, None] + 0.5 * (x[None, :] + 1.0)).ravel()
        plain = np.tile(0.5 * w, len(self.bands))
        self.weights = plain * mu_constant(self.alpha) * self.nodes ** (2.0 * self.alpha + 1.0)
        self.source = source
        if samples is None:
            samples = np.zeros(len(self.nodes), dtype=complex) if source is None else source(self.nodes)
        self.samples = np.asarray(samples, dtype=complex)
        if self.samples.shape != self.nodes.shape:
            raise TransformError(f"expected {len(self.nodes)} samples, got {self.samples.shape}")

    @classmethod
    def from_callable(cls, alpha: float, bands, g: Callable, band_dim: int) -> "BandProfile":
        return cls(alpha, bands, band_dim, source=g)

    @staticmethod
    def required_band_dim(t_max: float) -> int:
        return int(math.ceil(0.8 * math.pi * t_max)) + 32

    def resolving(self, t_max: float) -> "BandProfile":
        """Same profile resampled finely enough to synthesize up to t_max."""
        needed = self.required_band_dim(t_max)
        if self.band_dim >= needed:
            return self
        if self.source is None:
            raise UnderResolvedError(f"profile has {self.band_dim} nodes per band, {needed} needed and no source to resample")
        return BandProfile.from_callable(self.alpha, self.bands, self.source, needed)

    @property
    def max_frequency(self) -> float:
        return self.bands[-1][1]

    def norm_squared(self) -> float:
        return float(np.sum(self.weights * np.abs(self.samples) ** 2))

    def is_zero(self) -> bool:
        return not np.any(self.samples)

    def scaled(self, factor: complex) -> "BandProfile":
        source = None if self.source is None else (lambda y: factor * self.source(y))
        return BandProfile(self.alpha, self.bands, self.band_dim, samples=factor * self.samples, source=source)

    def to_csv(self) -> str:
        return write_columns(self.nodes, self.weights, self.samples)

    def __str__(self):
        return f"BandProfile(alpha={self.alpha}, bands={self.bands}, band_dim={self.band_dim})"


@dataclass
class BochnerReduction:
    alpha_eff: float
    g: Callable
    norm_factor: float
    n: int
    k: int
