import json
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from django.conf import settings
from scipy.special import gammaln

from apps.kernels.models import LabError

logger = logging.getLogger(__name__)


class MeasureError(LabError):
    pass


class InvalidSetError(MeasureError):
    pass


def _measure(lo, hi, alpha):
    if alpha is None:
        return hi - lo
    return mu_primitive(alpha, hi) - mu_primitive(alpha, lo)


def mu_constant(alpha: float) -> float:
    """c_a = 2 pi^{a+1} / Gamma(a+1)."""
    return math.exp(math.log(2.0) + (alpha + 1.0) * math.log(math.pi) - gammaln(alpha + 1.0))


def mu_primitive(alpha: float, x):
    """Antiderivative of the mu_alpha density, zero at the origin."""
    power = 2.0 * alpha + 2.0
    return mu_constant(alpha) * np.asarray(x, dtype=float) ** power / power


@dataclass
class DensityReport:
    window: float
    gamma_lebesgue: float | None = None
    argmin_r: float | None = None
    gamma_mu: float | None = None
    argmin_r_mu: float | None = None
    alpha: float | None = None

    def merge(self, other: "DensityReport") -> "DensityReport":
        merged = asdict(self)
        merged.update({key: value for key, value in asdict(other).items() if value is not None})
        return DensityReport(**merged)

    def to_dict(self) -> dict:
        return asdict(self)


class RadialSet:
    """Finite or periodic union of disjoint closed intervals in [0, infinity).

    A periodic set repeats its pattern inside [0, period); t_max bounds every
    evaluation that needs a finite domain.
    """

    def __init__(self, intervals, period: float | None = None, t_max: float | None = None):
        self.period = None if period is None else float(period)
        self.t_max = float(settings.LAB_T_MAX if t_max is None else t_max)
        if self.period is not None and not self.period > 0:
            raise InvalidSetError(f"period must be positive, got {period}")
        if not self.t_max > 0:
            raise InvalidSetError(f"t_max must be positive, got {t_max}")
        self.intervals = self._normalize(intervals)
        self._cache = {}

    def _normalize(self, intervals):
        cleaned = []
        for pair in intervals:
            if len(pair) != 2:
                raise InvalidSetError(f"interval must be a pair, got {pair}")
            a, b = float(pair[0]), float(pair[1])
            if not (0.0 <= a < b) or not math.isfinite(b):
                raise InvalidSetError(f"interval [{a}, {b}] must satisfy 0 <= a < b")
            if self.period is not None and b > self.period:
                raise InvalidSetError(f"interval [{a}, {b}] leaves the period [0, {self.period})")
            cleaned.append((a, b))
        cleaned.sort()
        merged = []
        for a, b in cleaned:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        return merged

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def is_periodic(self) -> bool:
        return self.period is not None

    def _materialized(self, extent: float):
        """Sorted start/end arrays of the set covering at least [0, extent]."""
        cached = self._cache.get("arrays")
        if cached is not None and cached[0] >= extent:
            return cached[1], cached[2]
        bound = max(float(extent), self.t_max)
        base = np.asarray(self.intervals, dtype=float).reshape(-1, 2)
        if self.is_periodic and len(base):
            repeats = int(math.ceil(bound / self.period)) + 1
            shifts = self.period * np.arange(repeats)
            base = (base[None, :, :] + shifts[:, None, None]).reshape(-1, 2)
        keep = base[:, 0] < bound
        starts, ends = base[keep, 0], base[keep, 1]
        self._cache["arrays"] = (bound, starts, ends)
        return starts, ends

    def pieces(self, lo: float, hi: float):
        """Intervals of E intersected with [lo, hi]."""
        if hi <= lo or self.is_empty:
            return []
        starts, ends = self._materialized(hi)
        left = np.maximum(starts, lo)
        right = np.minimum(ends, hi)
        keep = right > left
        return list(zip(left[keep].tolist(), right[keep].tolist()))

    def cumulative(self, x, alpha: float | None = None):
        """Measure of E intersected with [0, x]: Lebesgue when alpha is None, else mu_alpha."""
        x = np.asarray(x, dtype=float)
        if self.is_empty or x.size == 0:
            return np.zeros_like(x)
        starts, ends = self._materialized(float(np.max(x)))
        before = np.concatenate(([0.0], np.cumsum(_measure(starts, ends, alpha))))
        last = np.searchsorted(starts, x, side="right") - 1
        safe = np.maximum(last, 0)
        partial = _measure(starts[safe], np.clip(x, starts[safe], ends[safe]), alpha)
        return np.where(last >= 0, before[safe] + partial, 0.0)

    def lebesgue(self, lo, hi):
        return self.cumulative(hi) - self.cumulative(lo)

    def mu(self, alpha: float, lo, hi):
        return self.cumulative(hi, alpha) - self.cumulative(lo, alpha)

    def indicator(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_empty:
            return np.zeros_like(x, dtype=bool)
        starts, ends = self._materialized(float(np.max(x)) + 1e-12)
        index = np.searchsorted(starts, x, side="right") - 1
        valid = index >= 0
        safe = np.maximum(index, 0)
        return valid & (x >= starts[safe]) & (x <= ends[safe])

    def union(self, other: "RadialSet") -> "RadialSet":
        t_max = max(self.t_max, other.t_max)
        if self.is_periodic and other.is_periodic and self.period == other.period:
            return RadialSet(self.intervals + other.intervals, period=self.period, t_max=t_max)
        return RadialSet(self.pieces(0.0, t_max) + other.pieces(0.0, t_max), t_max=t_max)

    def truncated(self, t_max: float) -> "RadialSet":
        return RadialSet(self.intervals, period=self.period, t_max=t_max)

    def describe(self) -> str:
        kind = f"periodic(period={self.period})" if self.is_periodic else "finite"
        return f"{kind} with {len(self.intervals)} intervals, t_max={self.t_max}"

    def to_json(self) -> str:
        return json.dumps({"intervals": [list(pair) for pair in self.intervals], "period": self.period, "t_max": self.t_max})

    @classmethod
    def from_dict(cls, payload: dict) -> "RadialSet":
        unknown = set(payload) - {"intervals", "period", "t_max"}
        if unknown or "intervals" not in payload:
            raise InvalidSetError(f"bad set description: unknown fields {sorted(unknown)}")
        return cls(payload["intervals"], period=payload.get("period"), t_max=payload.get("t_max"))

    @classmethod
    def from_json(cls, text: str) -> "RadialSet":
        return cls.from_dict(json.loads(text))

    @classmethod
    def half_line(cls, t_max: float | None = None) -> "RadialSet":
        t_max = float(settings.LAB_T_MAX if t_max is None else t_max)
        return cls([(0.0, t_max)], t_max=t_max)

    @classmethod
    def empty(cls, t_max: float | None = None) -> "RadialSet":
        return cls([], t_max=t_max)

    def __str__(self):
        return f"RadialSet({self.describe()})"
