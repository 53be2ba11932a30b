import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln

logger = logging.getLogger(__name__)


class LabError(Exception):
    """Base class for every error raised by the laboratory."""


class ConvergenceError(LabError):
    """A numerical procedure did not reach its accuracy target."""


class KernelError(LabError):
    pass


class InvalidOrderError(KernelError):
    pass


class SeriesRadiusError(KernelError):
    pass


class KernelConvergenceError(KernelError, ConvergenceError):
    pass


@dataclass(frozen=True)
class BesselOrder:
    """Order alpha > -1/2 of the normalized kernel j_alpha and its asymptotic constants."""

    alpha: float
    m: int | None = field(init=False)
    A_alpha: float = field(init=False)
    delta: float = field(init=False)

    def __post_init__(self):
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha <= -0.5:
            raise InvalidOrderError(f"alpha must satisfy alpha > -1/2, got {self.alpha}")
        shifted = alpha - 0.5
        m = int(shifted) if shifted >= 0 and shifted.is_integer() else None
        log_amplitude = (alpha + 0.5) * math.log(2.0) + gammaln(alpha + 1.0) - 0.5 * math.log(math.pi)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "A_alpha", float(math.exp(log_amplitude)))
        object.__setattr__(self, "delta", (2.0 * alpha + 1.0) * math.pi / 4.0)

    @property
    def is_half_integer(self) -> bool:
        return self.m is not None

    @property
    def reliability_radius(self) -> float:
        return max(20.0, 4.0 * self.alpha + 10.0)

    def shifted(self, k: int) -> "BesselOrder":
        return BesselOrder(self.alpha + k)

    def __str__(self):
        return f"BesselOrder(alpha={self.alpha}, m={self.m})"


@dataclass(frozen=True)
class ExpDecomposition:
    """j_{m+1/2}(s) written as sum over signs and j in [m, 2m] of c_{sign,j} e^{sign i s} s^{-j-1}."""

    m: int
    coeffs: dict

    def __post_init__(self):
        expected = {(sign, j) for sign in "+-" for j in range(self.m, 2 * self.m + 1)}
        if set(self.coeffs) != expected:
            raise KernelError(f"decomposition of order m={self.m} needs keys {sorted(expected)}")

    def _terms(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s <= 0):
            raise KernelError("decomposition is only valid for s > 0")
        terms = []
        for (sign, j), c in self.coeffs.items():
            phase = np.exp(1j * s) if sign == "+" else np.exp(-1j * s)
            terms.append(c * phase * s ** (-j - 1.0))
        return terms

    def reconstruct(self, s):
        return sum(self._terms(s))

    def magnitude(self, s):
        # floating-point scale of the alternating sum
        return sum(np.abs(term) for term in self._terms(s))

    def max_conjugate_defect(self) -> float:
        return max(abs(self.coeffs[("-", j)] - np.conj(self.coeffs[("+", j)])) for j in range(self.m, 2 * self.m + 1))


@dataclass
class KernelCalibration:
    alpha: float
    K: float
    x0: float
    envelope: float | None = None

    def to_json(self) -> str:
        payload = {key: value for key, value in asdict(self).items() if value is not None}
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "KernelCalibration":
        payload = json.loads(text)
        unknown = set(payload) - {"alpha", "K", "x0", "envelope"}
        missing = {"alpha", "K", "x0"} - set(payload)
        if unknown or missing:
            raise KernelError(f"bad calibration record: unknown={sorted(unknown)} missing={sorted(missing)}")
        return cls(
            alpha=float(payload["alpha"]),
            K=float(payload["K"]),
            x0=float(payload["x0"]),
            envelope=None if payload.get("envelope") is None else float(payload["envelope"]),
        )
