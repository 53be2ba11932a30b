import logging
import math

import numpy as np
import scipy.linalg
from scipy.optimize import brentq
from scipy.stats import linregress

from apps.damped_wave.models import (
    BesselZeroError,
    DampedWaveConfig,
    DampedWaveConvergenceError,
    DampedWaveError,
    EnergyTrace,
    GeneratorMatrix,
)
from apps.kernels.evaluation import j_eval
from apps.pls.basis import PartitionedGrid

logger = logging.getLogger(__name__)

ZERO_SCAN_STEP = 0.25
GRAM_TOLERANCE = 1e-8
EIG_CONDITION_LIMIT = 1e8
MONOTONE_TOLERANCE = 1e-8
MIN_FIT_SAMPLES = 32
FIT_MODELS = ("exp", "poly")


def bessel_zeros(alpha: float, count: int):
    """First count positive zeros of j_alpha, bracketed by a sign-change scan and refined with brentq."""
    if count < 1:
        raise DampedWaveError(f"need at least one zero, got count={count}")
    upper = math.pi * (count + abs(alpha) + 2.0)
    x = np.arange(ZERO_SCAN_STEP, upper + ZERO_SCAN_STEP, ZERO_SCAN_STEP)
    values = j_eval(alpha, x)
    brackets = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    if len(brackets) < count:
        raise BesselZeroError(f"found {len(brackets)} sign changes of j_{alpha} below {upper:.1f}, need {count}")
    zeros = []
    for index in brackets[:count]:
        try:
            zeros.append(brentq(lambda t: j_eval(alpha, t), x[index], x[index + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))
        except (ValueError, RuntimeError) as e:
            logger.error(f"brentq failed near x={x[index]:.3f} for alpha={alpha}: {e}")
            raise BesselZeroError(f"zero of j_{alpha} in [{x[index]}, {x[index + 1]}] did not converge") from e
    return np.asarray(zeros)


def build_generator(config: DampedWaveConfig) -> GeneratorMatrix:
    """Dirichlet Fourier-Bessel modes on [0, L] with the damping projected by quadrature."""
    alpha = config.alpha
    zeros = bessel_zeros(alpha, config.modes)
    rho = zeros / (2.0 * math.pi * config.L)
    Lambda = (rho**2 + 1.0) ** (config.s / 2.0)
    grid = PartitionedGrid(alpha, config.E, config.L, max_freq=2.0 * float(rho[-1]))
    basis = j_eval(alpha, np.outer(grid.nodes, zeros / config.L))
    basis /= np.sqrt(np.sum(grid.weights[:, None] * basis**2, axis=0))[None, :]
    gram = basis.T @ (grid.weights[:, None] * basis)
    defect = float(np.max(np.abs(gram - np.eye(config.modes))))
    if defect > GRAM_TOLERANCE:
        raise DampedWaveConvergenceError(f"mode Gram matrix deviates from identity by {defect:.3e}")
    damped = grid.weights * grid.inside
    Gamma = config.c0 * (basis.T @ (damped[:, None] * basis))
    Gamma = 0.5 * (Gamma + Gamma.T)
    logger.debug(
        f"Generator for d={config.d}, s={config.s}: {config.modes} modes, rho_max={rho[-1]:.4f}, "
        f"{len(grid)} quadrature nodes, Gram defect {defect:.2e}"
    )
    return GeneratorMatrix(config=config, zeros=zeros, rho=rho, Lambda=Lambda, Gamma=Gamma)


def _generator(source) -> GeneratorMatrix:
    if isinstance(source, GeneratorMatrix):
        return source
    if isinstance(source, DampedWaveConfig):
        return build_generator(source)
    raise DampedWaveError(f"expected a DampedWaveConfig or GeneratorMatrix, got {type(source).__name__}")


def initial_data(generator: GeneratorMatrix, seed: int):
    """Seeded (w0, w1) weighted like H^s x H^{s/2} data, scaled to unit energy."""
    rng = np.random.default_rng(seed)
    base = generator.rho**2 + 1.0
    s = generator.config.s
    w0 = rng.normal(size=generator.modes) * base ** (-s / 2.0)
    w1 = rng.normal(size=generator.modes) * base ** (-s / 4.0)
    energy = np.linalg.norm(generator.to_energy_coordinates(w0, w1))
    return w0 / energy, w1 / energy


def _propagate(H, y0, times):
    values, vectors = scipy.linalg.eig(H)
    condition = np.linalg.cond(vectors)
    if math.isfinite(condition) and condition <= EIG_CONDITION_LIMIT:
        coeffs = scipy.linalg.solve(vectors, y0.astype(complex))
        states = vectors @ (np.exp(np.outer(values, times)) * coeffs[:, None])
        return states.real.T, "eig"
    # near-defective generator: dense exponential by scaling and squaring, stepped
    logger.warning(f"Eigenvector condition {condition:.3e} above {EIG_CONDITION_LIMIT:g}; stepping with expm")
    states = np.empty((len(times), len(y0)))
    states[0] = y0
    steps = np.diff(times)
    step_matrix = scipy.linalg.expm(H * steps[0])
    for index, dt in enumerate(steps, start=1):
        if abs(dt - steps[0]) > 1e-12 * steps[0]:
            step_matrix = scipy.linalg.expm(H * dt)
        states[index] = step_matrix @ states[index - 1]
    return states, "expm"


def evolve(source, initial, keep_states: bool = False) -> EnergyTrace:
    """Energy E(t) = ||(Lambda^{1/2} w, w_t)|| of the linear flow at every output time."""
    generator = _generator(source)
    config = generator.config
    w0, w1 = initial
    y0 = generator.to_energy_coordinates(w0, w1)
    if not np.any(y0):
        raise DampedWaveError("initial data must be nonzero")
    samples = int(round(config.t_final / config.output_dt))
    times = config.output_dt * np.arange(samples + 1)
    try:
        states, method = _propagate(generator.energy_form(), y0, times)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"Propagation failed: {e}")
        raise DampedWaveConvergenceError(f"propagation failed: {e}") from e
    trace = EnergyTrace(
        times=times,
        energies=np.linalg.norm(states, axis=1),
        metadata={"method": method, "modes": generator.modes, "d": config.d, "s": config.s, "c0": config.c0},
        states=states if keep_states else None,
    )
    increase = trace.max_relative_increase()
    if increase > MONOTONE_TOLERANCE:
        logger.warning(f"Energy grew by a relative {increase:.3e} along the trace")
    logger.info(f"Evolved {generator.modes} modes to t={config.t_final}: E(T)/E(0) = {trace.energies[-1] / trace.energies[0]:.4e}")
    return trace


def fit_decay(trace: EnergyTrace, model: str = "exp", window=None) -> dict:
    """Least-squares decay rate on the tail half: log E against t (exp) or log(1+t) (poly)."""
    if model not in FIT_MODELS:
        raise DampedWaveError(f"unknown decay model {model!r}; expected one of {FIT_MODELS}")
    if window is not None:
        trace = trace.window(*window)
    if len(trace) < MIN_FIT_SAMPLES:
        raise DampedWaveError(f"need at least {MIN_FIT_SAMPLES} samples to fit, got {len(trace)}")
    if np.any(trace.energies <= 0):
        raise DampedWaveError("energies must be positive to fit a decay rate")
    tail = trace.window(trace.times[len(trace) // 2], trace.times[-1])
    increase = tail.max_relative_increase()
    if increase > MONOTONE_TOLERANCE:
        raise DampedWaveConvergenceError(f"energy tail is not monotone (relative increase {increase:.3e})")
    x = tail.times if model == "exp" else np.log1p(tail.times)
    fit = linregress(x, np.log(tail.energies))
    record = {
        "model": model,
        "rate": float(-fit.slope),
        "r_squared": float(fit.rvalue**2),
        "t_lo": float(tail.times[0]),
        "t_hi": float(tail.times[-1]),
    }
    logger.debug(f"Fitted {model} decay: {record}")
    return record


def spectral_abscissa(source) -> float:
    """Largest real part in the generator spectrum."""
    generator = _generator(source)
    try:
        values = scipy.linalg.eigvals(generator.energy_form())
    except np.linalg.LinAlgError as e:
        logger.error(f"Eigenvalue computation failed: {e}")
        raise DampedWaveConvergenceError(f"eigenvalue computation failed: {e}") from e
    return float(np.max(values.real))


def constant_damping_abscissa(generator: GeneratorMatrix) -> float:
    """Per-mode closed form -c0/2 + Re sqrt(c0^2/4 - Lambda_i) for damping c0 everywhere."""
    c0 = generator.config.c0
    discriminant = c0**2 / 4.0 - generator.Lambda
    real_parts = -c0 / 2.0 + np.sqrt(np.maximum(discriminant, 0.0))
    return float(np.max(real_parts))


def group_speed(s: float, rho):
    """d omega / d k for omega = (rho^2 + 1)^{s/4} and k = 2 pi rho."""
    rho = np.asarray(rho, dtype=float)
    return s * rho * (rho**2 + 1.0) ** (s / 4.0 - 1.0) / (4.0 * math.pi)


def wave_horizon(generator: GeneratorMatrix) -> float:
    """Time before the fastest resolved wave can reach r = L."""
    speed = float(np.max(group_speed(generator.config.s, generator.rho)))
    return generator.config.L / speed if speed > 0 else math.inf


def polynomial_rate_floor(s: float) -> float:
    """Decay exponent s / (4 - 2s) of the polynomial energy bound, defined for 0 < s < 2."""
    if not 0 < s < 2:
        raise DampedWaveError(f"the polynomial rate applies to 0 < s < 2, got s={s}")
    return s / (4.0 - 2.0 * s)
