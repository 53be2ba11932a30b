import logging
import math

import numpy as np
from django.conf import settings

from apps.measure.models import InvalidSetError, RadialSet

logger = logging.getLogger(__name__)

SET_KINDS = ("periodic", "random_union", "complement_thin")


def _periodic(params: dict, rng) -> RadialSet:
    period = float(params.get("period", 1.0))
    blocks = params.get("blocks") or [params.get("block", [0.0, 0.5])]
    for a, b in blocks:
        if b - a >= period:
            raise InvalidSetError(f"block [{a}, {b}] does not fit in period {period}")
    return RadialSet(blocks, period=period, t_max=params.get("t_max"))


def _random_union(params: dict, rng) -> RadialSet:
    """Every cell of width h = 1/q gets one block of length rho*h at a random offset.

    A unit window contains at least q-1 whole cells, so its measure is at least
    (q-1) rho h = gamma.
    """
    gamma = float(params["gamma"])
    t_max = float(params.get("t_max", settings.LAB_T_MAX))
    if not 0.0 < gamma <= 1.0:
        raise InvalidSetError(f"requested density {gamma} must lie in (0, 1]")
    if gamma == 1.0:
        return RadialSet([(0.0, t_max)], t_max=t_max)
    q = int(params.get("cells_per_unit", max(4, math.ceil(4.0 / (1.0 - gamma)))))
    h = 1.0 / q
    rho = gamma / (1.0 - h)
    if rho > 1.0:
        raise InvalidSetError(f"{q} cells per unit cannot carry density {gamma}")
    cells = int(math.ceil(t_max / h))
    offsets = rng.uniform(0.0, (1.0 - rho) * h, size=cells)
    starts = np.arange(cells) * h + offsets
    ends = np.minimum(starts + rho * h, t_max)
    keep = ends > starts
    return RadialSet(list(zip(starts[keep], ends[keep])), t_max=t_max)


def _complement_thin(params: dict, rng) -> RadialSet:
    """[0, t_max] with the gaps [n, n + g0/n] removed for n >= start."""
    g0 = float(params.get("g0", 0.5))
    start = int(params.get("start", 1))
    t_max = float(params.get("t_max", settings.LAB_T_MAX))
    if not 0.0 < g0 < 1.0 or start < 1:
        raise InvalidSetError(f"need 0 < g0 < 1 and start >= 1, got g0={g0}, start={start}")
    intervals = [(0.0, float(start))]
    for n in range(start, int(math.floor(t_max)) + 1):
        lo, hi = n + g0 / n, min(n + 1.0, t_max)
        if hi > lo:
            intervals.append((lo, hi))
    return RadialSet(intervals, t_max=t_max)


_BUILDERS = {
    "periodic": _periodic,
    "random_union": _random_union,
    "complement_thin": _complement_thin,
}


def generate_set(kind: str, params: dict | None = None, seed: int | None = None) -> RadialSet:
    if kind not in _BUILDERS:
        raise InvalidSetError(f"unknown set kind {kind!r}; expected one of {SET_KINDS}")
    rng = np.random.default_rng(settings.LAB_DEFAULT_SEED if seed is None else seed)
    try:
        radial_set = _BUILDERS[kind](dict(params or {}), rng)
    except (KeyError, TypeError, ValueError) as e:
        logger.error(f"Invalid parameters for {kind} set: {e}")
        raise InvalidSetError(f"invalid parameters for {kind}: {e}") from e
    logger.info(f"Generated {kind} set: {radial_set.describe()}")
    return radial_set
