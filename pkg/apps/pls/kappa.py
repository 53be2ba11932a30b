import logging

import numpy as np
import scipy.linalg
from django.conf import settings

from apps.pls.basis import BandBasis, PartitionedGrid, concentration_matrices
from apps.pls.models import ConcentrationConvergenceError, ConcentrationProblem, KappaResult
from apps.transform.models import BandProfile

logger = logging.getLogger(__name__)

HERMITIAN_TOLERANCE = 1e-10
MAX_DOUBLINGS = 4


def hermitian_defect(matrix) -> float:
    scale = np.linalg.norm(matrix)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(matrix - matrix.conj().T) / scale)


def _pencil_eigenvalue(B, A, index: int) -> float:
    for matrix in (A, B):
        defect = hermitian_defect(matrix)
        if defect > HERMITIAN_TOLERANCE:
            raise ConcentrationConvergenceError(f"Hermitian defect {defect:.3e} exceeds {HERMITIAN_TOLERANCE:g}")
    A = 0.5 * (A + A.conj().T)
    B = 0.5 * (B + B.conj().T)
    try:
        values = scipy.linalg.eigh(B, A, eigvals_only=True, subset_by_index=[index, index])
    except np.linalg.LinAlgError as e:
        logger.error(f"Generalized eigensolve failed: {e}")
        raise ConcentrationConvergenceError(f"generalized eigensolve failed: {e}") from e
    return float(values[0])


def smallest_eigenvalue(B, A) -> float:
    """Smallest eigenvalue of the pencil (B, A) with A positive definite."""
    return _pencil_eigenvalue(B, A, 0)


def largest_eigenvalue(B, A) -> float:
    return _pencil_eigenvalue(B, A, A.shape[0] - 1)


def _kappa_at(problem: ConcentrationProblem, t_max: float) -> KappaResult:
    basis = BandBasis(problem.alpha, problem.bands, problem.band_dim, BandProfile.required_band_dim(t_max))
    grid = PartitionedGrid(problem.alpha, problem.E, t_max, problem.max_frequency)
    full, restricted, outer = concentration_matrices(basis, grid)
    A = basis.gram()
    kappa = smallest_eigenvalue(restricted, A)
    tail = 1.0 - smallest_eigenvalue(full, A)
    # under the t^-2 envelope decay the mass beyond t_max equals the mass on [t_max/2, t_max]
    envelope_tail = largest_eigenvalue(outer, A)
    return KappaResult(
        kappa=min(max(kappa, 0.0), 1.0),
        tail_bound=max(tail, 0.0),
        envelope_tail=min(max(envelope_tail, 0.0), 1.0),
        t_max=t_max,
        band_dim=problem.band_dim,
        hermitian_defect=hermitian_defect(restricted),
    )


def kappa(problem: ConcentrationProblem) -> KappaResult:
    """Smallest concentration ratio on E over functions with spectrum in the bands.

    t_max is doubled until the tail bound meets the problem's tolerance.
    """
    t_max = problem.initial_t_max
    for attempt in range(MAX_DOUBLINGS + 1):
        result = _kappa_at(problem, t_max)
        logger.debug(
            f"kappa={result.kappa:.6g} tail={result.tail_bound:.3e} at t_max={t_max:g}, "
            f"bands={problem.bands}, band_dim={problem.band_dim}"
        )
        if result.tail_bound <= problem.tail_tolerance:
            return result
        t_max *= 2.0
    raise ConcentrationConvergenceError(
        f"tail bound {result.tail_bound:.3e} above {problem.tail_tolerance:g} after {MAX_DOUBLINGS} doublings "
        f"(t_max={result.t_max:g}, bands={problem.bands})"
    )


def check_kappa_stability(problem: ConcentrationProblem, result: KappaResult | None = None, tolerance: float | None = None):
    """Recompute on the refined problem; returns (refined result, converged flag)."""
    tolerance = settings.LAB_STABILITY_TOLERANCE if tolerance is None else tolerance
    result = result or kappa(problem)
    refined = kappa(problem.refined())
    if result.kappa > 0:
        change = abs(result.kappa - refined.kappa) / result.kappa
    else:
        change = 0.0 if refined.kappa == 0 else np.inf
    converged = bool(change <= tolerance)
    if not converged:
        logger.warning(
            f"kappa unstable under refinement for bands={problem.bands}: "
            f"{result.kappa:.6g} -> {refined.kappa:.6g} (change {change:.3g})"
        )
    return refined, converged
