import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from django.conf import settings

from apps.kernels.models import ConvergenceError, LabError
from apps.measure.models import RadialSet

logger = logging.getLogger(__name__)

MIN_DOMAIN_RADIUS = 40.0
MAX_OUTPUT_SAMPLES = 1_000_000


class DampedWaveError(LabError):
    pass


class BesselZeroError(DampedWaveError, ConvergenceError):
    pass


class DampedWaveConvergenceError(DampedWaveError, ConvergenceError):
    pass


@dataclass
class DampedWaveConfig:
    """Radial damped wave problem on the ball of radius L in R^d.

    Damping is c0 on E and zero elsewhere.
    """

    d: int
    s: float
    E: RadialSet
    c0: float
    L: float = MIN_DOMAIN_RADIUS
    modes: int = 64
    t_final: float = 100.0
    output_dt: float = 0.5

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise DampedWaveError(f"space dimension must be an integer >= 2 (alpha = d/2 - 1 > -1/2), got d={self.d}")
        self.d = int(self.d)
        if not self.s > 0:
            raise DampedWaveError(f"fractional order s must be positive, got {self.s}")
        if not (0.0 <= self.c0 < math.inf):
            raise DampedWaveError(f"damping level c0 must be finite and nonnegative, got {self.c0}")
        if self.L < MIN_DOMAIN_RADIUS:
            raise DampedWaveError(f"domain radius L must be at least {MIN_DOMAIN_RADIUS}, got {self.L}")
        if not 1 <= self.modes <= settings.LAB_MAX_MODES:
            raise DampedWaveError(f"modes must lie in [1, {settings.LAB_MAX_MODES}], got {self.modes}")
        if not (self.t_final > 0 and self.output_dt > 0):
            raise DampedWaveError("t_final and output_dt must be positive")
        if self.t_final / self.output_dt > MAX_OUTPUT_SAMPLES:
            raise DampedWaveError(f"t_final / output_dt exceeds {MAX_OUTPUT_SAMPLES} samples")

    @property
    def alpha(self) -> float:
        return self.d / 2.0 - 1.0

    def damping(self, r):
        return self.c0 * self.E.indicator(r)

    def with_modes(self, modes: int) -> "DampedWaveConfig":
        payload = self.to_dict()
        payload["modes"] = modes
        return DampedWaveConfig.from_dict(payload)

    def to_dict(self) -> dict:
        payload = {key: value for key, value in asdict(self).items() if key != "E"}
        payload["E"] = json.loads(self.E.to_json())
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "DampedWaveConfig":
        payload = dict(payload)
        unknown = set(payload) - {"d", "s", "E", "c0", "L", "modes", "t_final", "output_dt"}
        if unknown:
            raise DampedWaveError(f"unknown damped wave fields {sorted(unknown)}")
        E = payload.pop("E", None)
        E = RadialSet.half_line() if E is None else RadialSet.from_dict(E)
        return cls(E=E, **payload)


@dataclass
class GeneratorMatrix:
    """Generator in energy coordinates y = (Lambda^{1/2} w, w_t): [[0, Lambda^{1/2}], [-Lambda^{1/2}, -Gamma]]."""

    config: DampedWaveConfig
    zeros: np.ndarray
    rho: np.ndarray
    Lambda: np.ndarray
    Gamma: np.ndarray

    @property
    def modes(self) -> int:
        return len(self.Lambda)

    @property
    def dimension(self) -> int:
        return 2 * self.modes

    def energy_form(self):
        root = np.diag(np.sqrt(self.Lambda))
        zero = np.zeros_like(root)
        return np.block([[zero, root], [-root, -self.Gamma]])

    def block_form(self):
        """[[0, I], [-Lambda, -Gamma]] acting on (w, w_t)."""
        eye = np.eye(self.modes)
        return np.block([[np.zeros_like(eye), eye], [-np.diag(self.Lambda), -self.Gamma]])

    def to_energy_coordinates(self, w0, w1):
        w0 = np.asarray(w0, dtype=float)
        w1 = np.asarray(w1, dtype=float)
        if w0.shape != (self.modes,) or w1.shape != (self.modes,):
            raise DampedWaveError(f"initial data needs {self.modes} coefficients per component")
        return np.concatenate((np.sqrt(self.Lambda) * w0, w1))


@dataclass
class EnergyTrace:
    times: np.ndarray
    energies: np.ndarray
    fitted: dict | None = None
    metadata: dict = field(default_factory=dict)
    states: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.energies = np.asarray(self.energies, dtype=float)
        if self.times.shape != self.energies.shape:
            raise DampedWaveError("one energy per time is required")
        if np.any(np.diff(self.times) <= 0):
            raise DampedWaveError("trace times must increase")

    def __len__(self):
        return len(self.times)

    def max_relative_increase(self) -> float:
        """Largest E(t_{k+1}) / E(t_k) - 1 along the trace."""
        if len(self) < 2:
            return 0.0
        return float(np.max(self.energies[1:] / self.energies[:-1] - 1.0))

    def window(self, t_lo: float, t_hi: float) -> "EnergyTrace":
        keep = (self.times >= t_lo) & (self.times <= t_hi)
        return EnergyTrace(times=self.times[keep], energies=self.energies[keep], metadata=dict(self.metadata))

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["t", "E", "logE"])
        for t, energy in zip(self.times, self.energies):
            log_energy = math.log(energy) if energy > 0 else float("-inf")
            writer.writerow([repr(float(t)), repr(float(energy)), repr(log_energy)])
        return buffer.getvalue()

    def to_dict(self) -> dict:
        return {"fitted": self.fitted, "metadata": self.metadata, "samples": len(self)}
