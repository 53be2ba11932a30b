import logging
import math

from apps.pls.models import ConcentrationError, GJConstant

logger = logging.getLogger(__name__)

R_COEFFICIENT = 160.0 * math.sqrt(3.0) * math.pi / (2.0 * math.log(2.0))


def gj_exponent(alpha: float, R: float) -> float:
    return R_COEFFICIENT * R + alpha * math.log(3.0) / math.log(2.0) + 1.0


def gj_constant(alpha: float, gamma: float, R: float) -> GJConstant:
    """(3/2) (300 9^a / gamma)^exponent for gamma-relatively dense sets, kept in log10."""
    if alpha < 0:
        raise ConcentrationError(f"the explicit constant needs alpha >= 0, got {alpha}")
    if not 0 < gamma <= 1:
        raise ConcentrationError(f"gamma must lie in (0, 1], got {gamma}")
    if not R > 0:
        raise ConcentrationError(f"R must be positive, got {R}")
    exponent = gj_exponent(alpha, R)
    log10_base = math.log10(300.0) + alpha * math.log10(9.0) - math.log10(gamma)
    constant = GJConstant(
        alpha=float(alpha),
        gamma=float(gamma),
        R=float(R),
        exponent=exponent,
        log10_base=log10_base,
        log10_C=math.log10(1.5) + exponent * log10_base,
    )
    logger.debug(f"Explicit constant at alpha={alpha}, gamma={gamma}, R={R}: log10 C = {constant.log10_C:.6g}")
    return constant


def gj_naive_annulus(alpha: float, gamma: float, R: float) -> float:
    """log10 of the constant obtained by treating [R, R+1] as part of [0, R+1]."""
    return gj_constant(alpha, gamma, R + 1.0).log10_C
