import csv
import io
import json
import logging
import statistics
from dataclasses import asdict, dataclass, field

from django.conf import settings

from apps.kernels.models import BesselOrder, ConvergenceError, LabError
from apps.measure.models import RadialSet

logger = logging.getLogger(__name__)

PLATEAU_TOLERANCE = 0.10


class ConcentrationError(LabError):
    pass


class OverlappingBandsError(ConcentrationError):
    pass


class ConcentrationConvergenceError(ConcentrationError, ConvergenceError):
    pass


def _normalize_bands(bands):
    normalized = []
    for band in bands:
        lo, hi = float(band[0]), float(band[1])
        if lo < 0 or abs(hi - lo - 1.0) > 1e-12:
            raise ConcentrationError(f"band [{lo:g}, {hi:g}] must be a unit interval in [0, infinity)")
        normalized.append((lo, hi))
    normalized.sort()
    for (_, hi), (lo, _) in zip(normalized, normalized[1:]):
        if lo < hi:
            raise OverlappingBandsError(f"bands ending at {hi:g} and starting at {lo:g} overlap")
    return normalized


@dataclass
class ConcentrationProblem:
    """Rayleigh quotient of the E-restricted norm over functions with spectrum in the bands."""

    alpha: float
    bands: list
    E: RadialSet
    band_dim: int = field(default_factory=lambda: settings.LAB_BAND_DIM)
    t_max: float | None = None
    tail_tolerance: float = field(default_factory=lambda: settings.LAB_TAIL_TOLERANCE)

    def __post_init__(self):
        BesselOrder(self.alpha)
        self.alpha = float(self.alpha)
        if not self.bands:
            raise ConcentrationError("at least one band is required")
        self.bands = _normalize_bands(self.bands)
        if self.band_dim < 16:
            raise ConcentrationError(f"band_dim must be at least 16, got {self.band_dim}")
        if self.dimension > settings.LAB_MAX_EIG_DIM:
            raise ConcentrationError(f"eigenproblem dimension {self.dimension} exceeds {settings.LAB_MAX_EIG_DIM}")
        if self.t_max is not None and not self.t_max > 0:
            raise ConcentrationError(f"t_max must be positive, got {self.t_max}")

    @property
    def dimension(self) -> int:
        return self.band_dim * len(self.bands)

    @property
    def max_frequency(self) -> float:
        return self.bands[-1][1]

    @property
    def initial_t_max(self) -> float:
        return float(self.t_max if self.t_max is not None else settings.LAB_PLS_T_SCALE * self.band_dim)

    def refined(self) -> "ConcentrationProblem":
        """Same problem with band_dim and t_max doubled."""
        return ConcentrationProblem(
            alpha=self.alpha,
            bands=self.bands,
            E=self.E,
            band_dim=2 * self.band_dim,
            t_max=None if self.t_max is None else 2.0 * self.t_max,
            tail_tolerance=self.tail_tolerance,
        )


@dataclass
class SweepConfig:
    band_dim: int = field(default_factory=lambda: settings.LAB_BAND_DIM)
    t_max: float | None = None
    tail_tolerance: float = field(default_factory=lambda: settings.LAB_TAIL_TOLERANCE)
    check_stability: bool = True
    threads: int = 1
    use_celery: bool = field(default_factory=lambda: settings.LAB_USE_CELERY)
    seed: int = field(default_factory=lambda: settings.LAB_DEFAULT_SEED)

    def __post_init__(self):
        if self.threads < 1:
            raise ConcentrationError(f"threads must be at least 1, got {self.threads}")


@dataclass
class KappaResult:
    kappa: float
    tail_bound: float
    t_max: float
    band_dim: int
    envelope_tail: float = 0.0
    hermitian_defect: float = 0.0


@dataclass
class SweepEntry:
    R: float
    kappa: float
    tail_bound: float
    band_dim: int
    t_max: float
    positions: tuple = ()
    kappa_refined: float | None = None
    converged: bool | None = None
    envelope_tail: float | None = None

    def __post_init__(self):
        self.positions = tuple(self.positions)


@dataclass
class SweepResult:
    entries: list
    metadata: dict

    def kappas(self):
        return [entry.kappa for entry in self.entries]

    def plateau_start(self):
        """First R from which every later kappa is within 10% of the median of the later entries."""
        kappas = self.kappas()
        for index, entry in enumerate(self.entries):
            tail = kappas[index:]
            median = statistics.median(tail)
            if median > 0 and all(abs(value - median) <= PLATEAU_TOLERANCE * median for value in tail):
                return entry.R
        return None

    def summary(self) -> dict:
        kappas = self.kappas()
        low, high = min(kappas), max(kappas)
        return {
            "min_kappa": low,
            "max_kappa": high,
            "ratio": high / low if low > 0 else float("inf"),
            "plateau_start": self.plateau_start(),
            "all_converged": all(entry.converged is not False for entry in self.entries),
            "entries": len(self.entries),
        }

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "summary": self.summary(),
            "entries": [asdict(entry) for entry in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["R", "positions", "kappa", "tail_bound", "envelope_tail", "band_dim", "t_max", "kappa_refined", "converged"])
        for entry in self.entries:
            writer.writerow(
                [
                    repr(entry.R),
                    ";".join(repr(p) for p in entry.positions),
                    repr(entry.kappa),
                    repr(entry.tail_bound),
                    "" if entry.envelope_tail is None else repr(entry.envelope_tail),
                    entry.band_dim,
                    repr(entry.t_max),
                    "" if entry.kappa_refined is None else repr(entry.kappa_refined),
                    "" if entry.converged is None else int(entry.converged),
                ]
            )
        return buffer.getvalue()


@dataclass
class GJConstant:
    """Explicit constant of the relatively-dense-set estimate, held in log10."""

    alpha: float
    gamma: float
    R: float
    exponent: float
    log10_base: float
    log10_C: float

    @property
    def log10_inverse(self) -> float:
        return -self.log10_C

    @property
    def log10_kappa_bound(self) -> float:
        # kappa = C^-2
        return -2.0 * self.log10_C

    @property
    def kappa_lower_bound(self) -> float:
        return 10.0**self.log10_kappa_bound if self.log10_kappa_bound > -300 else 0.0

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload.update(log10_inverse=self.log10_inverse, log10_kappa_bound=self.log10_kappa_bound)
        return payload
