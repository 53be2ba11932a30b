import logging
import math
from functools import lru_cache

from scipy.special import gamma

from apps.kernels.models import ExpDecomposition, KernelError

logger = logging.getLogger(__name__)


@lru_cache(maxsize=64)
def decompose_exponentials(m: int) -> ExpDecomposition:
    """Exact exponential form of j_{m+1/2}.

    With P = Gamma(m+3/2)/(m! sqrt(pi)) and the expansions
    (y^2 - 2iy)^m = sum a_j y^j, (y^2 + 2iy)^m = sum b_j y^j,
    the coefficients are c_{+,j} = -i P j! a_j and c_{-,j} = +i P j! b_j.
    """
    if int(m) != m or m < 0:
        raise KernelError(f"m must be a nonnegative integer, got {m}")
    m = int(m)
    prefactor = gamma(m + 1.5) / (math.factorial(m) * math.sqrt(math.pi))
    coeffs = {}
    for i in range(m + 1):
        n = m + i
        a_j = math.comb(m, i) * (-2j) ** (m - i)
        b_j = math.comb(m, i) * (2j) ** (m - i)
        coeffs[("+", n)] = complex(-1j * prefactor * math.factorial(n) * a_j)
        coeffs[("-", n)] = complex(1j * prefactor * math.factorial(n) * b_j)
    decomposition = ExpDecomposition(m=m, coeffs=coeffs)
    logger.debug(f"Built exponential decomposition for m={m}")
    return decomposition
