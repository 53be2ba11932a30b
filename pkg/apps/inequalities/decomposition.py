import logging

import numpy as np

from apps.inequalities.models import InequalityError
from apps.kernels.decomposition import decompose_exponentials
from apps.kernels.series import j_reference

logger = logging.getLogger(__name__)

MAX_M = 6


def decomposition_residual(m: int, s_grid) -> float:
    """Max gap between j_{m+1/2} at extended precision and its exponential form.

    The gap is divided by max(|j|, s^{-m-1}), so it is relative away from the
    zeros of j and measured against the kernel envelope near them.
    """
    if int(m) != m or not 0 <= m <= MAX_M:
        raise InequalityError(f"m must be an integer in [0, {MAX_M}], got {m}")
    s = np.asarray(s_grid, dtype=float).ravel()
    if s.size == 0 or np.any(s < 1.0):
        raise InequalityError("the residual is defined on a nonempty grid with s >= 1")
    m = int(m)
    reference = j_reference(m + 0.5, s)
    reconstructed = decompose_exponentials(m).reconstruct(s).real
    scale = np.maximum(np.abs(reference), s ** (-m - 1.0))
    residual = float(np.max(np.abs(reference - reconstructed) / scale))
    logger.debug(f"Decomposition residual m={m} over {s.size} points: {residual:.3e}")
    return residual
