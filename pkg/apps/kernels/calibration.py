import logging
from functools import lru_cache

import numpy as np
from django.conf import settings

from apps.kernels.evaluation import j_eval, j_tilde, seam_point
from apps.kernels.models import KernelCalibration
from apps.kernels.series import _as_order, j_reference

logger = logging.getLogger(__name__)

CALIBRATION_RANGE = (5.0, 200.0)
ENVELOPE_RANGE = (0.0, 1000.0)
ENVELOPE_POINTS = 20000
SAFETY = 1.02
K_FLOOR = 1e-9


@lru_cache(maxsize=64)
def _calibrate(alpha: float, points: int, dps: int) -> KernelCalibration:
    order = _as_order(alpha)
    x = np.geomspace(*CALIBRATION_RANGE, points)
    reference = j_reference(order, x, dps=dps)
    remainder = np.abs(reference - j_tilde(order, x)) * x ** (order.alpha + 1.5)
    K = max(SAFETY * float(np.max(remainder)), K_FLOOR)

    xs = np.linspace(*ENVELOPE_RANGE, ENVELOPE_POINTS)
    envelope = SAFETY * float(np.max(np.abs(j_eval(order, xs)) * (1.0 + xs) ** (order.alpha + 0.5)))

    calibration = KernelCalibration(alpha=order.alpha, K=K, x0=seam_point(order.alpha), envelope=envelope)
    logger.info(
        f"Calibrated {order}: K={calibration.K:.6g}, x0={calibration.x0:.4f}, envelope={calibration.envelope:.6g}"
    )
    return calibration


def calibrate(order) -> KernelCalibration:
    """Remainder constant K(alpha), dispatch seam and envelope constant C(alpha) for one order."""
    order = _as_order(order)
    return _calibrate(order.alpha, settings.LAB_CALIBRATION_POINTS, settings.LAB_ORACLE_DPS)


def j_asymptotic(order, x):
    """Leading asymptotic term and the calibrated bound K(alpha) x^{-a-3/2} on its error."""
    order = _as_order(order)
    value = j_tilde(order, x)
    bound = calibrate(order).K * np.asarray(x, dtype=float) ** (-order.alpha - 1.5)
    if np.ndim(x) == 0:
        bound = float(bound)
    return value, bound
