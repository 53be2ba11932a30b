import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from apps.kernels.models import ConvergenceError, LabError

logger = logging.getLogger(__name__)

TRIAL_CSV_HEADER = ["seed", "N", "M", "interval_length", "set_measure", "ratio", "bound"]


class InequalityError(LabError):
    pass


class QuadratureConvergenceError(InequalityError, ConvergenceError):
    pass


class ExpPolynomial:
    """r(x) = sum_k p_k(x) exp(2 pi i lambda_k x), p_k[j] multiplying x^j."""

    def __init__(self, frequencies, coeffs):
        self.frequencies = np.asarray(frequencies, dtype=float).ravel()
        rows = [np.asarray(c, dtype=complex).ravel() for c in coeffs]
        if len(rows) != len(self.frequencies) or not rows:
            raise InequalityError(f"need one coefficient list per frequency, got {len(rows)} for {len(self.frequencies)}")
        if len(np.unique(self.frequencies)) != len(self.frequencies):
            raise InequalityError(f"frequencies must be distinct, got {self.frequencies.tolist()}")
        self.M = max(len(row) for row in rows)
        if self.M == 0:
            raise InequalityError("every polynomial is empty")
        self.coeffs = np.zeros((len(rows), self.M), dtype=complex)
        for index, row in enumerate(rows):
            self.coeffs[index, : len(row)] = row
        if not np.any(self.coeffs):
            raise InequalityError("an exponential polynomial needs a nonzero coefficient")

    @property
    def N(self) -> int:
        return len(self.frequencies)

    @property
    def max_frequency(self) -> float:
        return float(np.max(np.abs(self.frequencies)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for lam, row in zip(self.frequencies, self.coeffs):
            out += P.polyval(x, row) * np.exp(2j * np.pi * lam * x)
        return out

    def rescaled(self, a: float) -> "ExpPolynomial":
        """x -> r(x / a)."""
        powers = float(a) ** -np.arange(self.M)
        return ExpPolynomial(self.frequencies / a, self.coeffs * powers[None, :])

    @classmethod
    def random(cls, N: int, M: int, rng, freq_scale: float = 4.0) -> "ExpPolynomial":
        frequencies = rng.uniform(-freq_scale, freq_scale, N)
        coeffs = rng.normal(size=(N, M)) + 1j * rng.normal(size=(N, M))
        return cls(frequencies, coeffs)

    def to_dict(self) -> dict:
        return {
            "frequencies": self.frequencies.tolist(),
            "coeffs": [[[c.real, c.imag] for c in row] for row in self.coeffs],
        }

    def __str__(self):
        return f"ExpPolynomial(N={self.N}, M={self.M})"


@dataclass
class NazarovTuranTrial:
    seed: int
    N: int
    M: int
    interval_length: float
    set_measure: float
    ratio: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.ratio <= self.bound


@dataclass
class NazarovTuranCalibration:
    trials: list
    C0: float
    C0_needed: float
    p: float
    root_seed: int
    metadata: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return sum(not trial.holds for trial in self.trials)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(TRIAL_CSV_HEADER)
        for trial in self.trials:
            writer.writerow([trial.seed, trial.N, trial.M] + [repr(float(getattr(trial, name))) for name in TRIAL_CSV_HEADER[3:]])
        return buffer.getvalue()

    def sidecar(self) -> dict:
        return {
            "C0": self.C0,
            "C0_needed": self.C0_needed,
            "p": self.p,
            "root_seed": self.root_seed,
            "trials": len(self.trials),
            "violations": self.violations,
            "max_ratio": max(trial.ratio for trial in self.trials),
            **self.metadata,
        }

    def sidecar_json(self) -> str:
        return json.dumps(self.sidecar(), indent=2, sort_keys=True)


@dataclass
class BernsteinResult:
    alpha: float
    R: float
    k: int
    ratio: float
    spectral_ratio: float
    t_max: float
    plancherel_gap: float

    def to_dict(self) -> dict:
        return asdict(self)
