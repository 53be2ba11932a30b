import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from django.conf import settings
from scipy.optimize import minimize

from apps.inequalities.models import (
    ExpPolynomial,
    InequalityError,
    NazarovTuranCalibration,
    NazarovTuranTrial,
    QuadratureConvergenceError,
)
from apps.measure.models import RadialSet
from apps.transform.models import composite_gauss_legendre

logger = logging.getLogger(__name__)

NODES_PER_UNIT_FREQUENCY = 64
QUADRATURE_TOLERANCE = 1e-6


def _check_interval(interval) -> tuple[float, float]:
    lo, hi = float(interval[0]), float(interval[1])
    if not 0.0 <= lo < hi:
        raise InequalityError(f"interval [{lo}, {hi}] must satisfy 0 <= lo < hi")
    return lo, hi


def _check_p(p: float) -> float:
    p = float(p)
    if not 1.0 <= p < math.inf:
        raise InequalityError(f"p must lie in [1, infinity), got {p}")
    return p


def _quadrature(pieces, r: ExpPolynomial, refine: int = 1):
    extent = max(1.0, r.max_frequency + r.M)
    nodes_per_panel = settings.LAB_NODES_PER_PANEL
    width = nodes_per_panel / (refine * NODES_PER_UNIT_FREQUENCY * extent)
    nodes, weights = [], []
    for lo, hi in pieces:
        x, w = composite_gauss_legendre(lo, hi, width, nodes_per_panel)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _lp(values, weights, p: float) -> float:
    return float(np.sum(weights * np.abs(values) ** p)) ** (1.0 / p)


def _ratio(r: ExpPolynomial, interval, pieces, p: float, refine: int = 1) -> float:
    x_full, w_full = _quadrature([interval], r, refine)
    x_set, w_set = _quadrature(pieces, r, refine)
    restricted = _lp(r(x_set), w_set, p)
    if restricted == 0.0:
        return math.inf
    return _lp(r(x_full), w_full, p) / restricted


def set_pieces(interval, E: RadialSet):
    lo, hi = _check_interval(interval)
    pieces = E.pieces(lo, hi)
    measure = sum(b - a for a, b in pieces)
    if measure <= 0.0:
        raise InequalityError(f"E has zero measure inside [{lo}, {hi}]")
    return pieces, measure


def nazarov_turan_exponent(r: ExpPolynomial, p: float) -> float:
    return r.N * r.M - (p - 1.0) / p


def nazarov_turan_bound(r: ExpPolynomial, length: float, measure: float, p: float, C0: float | None = None) -> float:
    C0 = settings.LAB_NT_C0 if C0 is None else C0
    log_bound = nazarov_turan_exponent(r, p) * math.log(C0 * length / measure)
    return math.exp(log_bound) if log_bound < 700.0 else math.inf


def nazarov_turan_ratio(r: ExpPolynomial, interval, E: RadialSet, p: float = 2.0, C0: float | None = None):
    """||r||_{L^p(I)} / ||r||_{L^p(E cap I)} and the bound (C0 |I| / |E|)^{NM - (p-1)/p}."""
    p = _check_p(p)
    lo, hi = _check_interval(interval)
    pieces, measure = set_pieces((lo, hi), E)
    ratio = _ratio(r, (lo, hi), pieces, p)
    check = _ratio(r, (lo, hi), pieces, p, refine=2)
    if abs(check - ratio) > QUADRATURE_TOLERANCE * check:
        raise QuadratureConvergenceError(f"L^p quadrature of {r} did not settle: {ratio!r} vs {check!r}")
    return ratio, nazarov_turan_bound(r, hi - lo, measure, p, C0)


def needed_constant(ratio: float, exponent: float, length: float, measure: float) -> float:
    """Smallest C0 for which the bound admits the observed ratio."""
    return ratio ** (1.0 / exponent) * measure / length


def random_subset(interval, fraction: float, cells: int, rng) -> RadialSet:
    """Union of round(fraction * cells) randomly chosen equal cells of the interval."""
    lo, hi = _check_interval(interval)
    if not 0.0 < fraction <= 1.0 or cells < 1:
        raise InequalityError(f"need 0 < fraction <= 1 and cells >= 1, got {fraction}, {cells}")
    count = max(1, int(round(fraction * cells)))
    chosen = np.sort(rng.choice(cells, size=count, replace=False))
    edges = np.linspace(lo, hi, cells + 1)
    return RadialSet([(edges[i], edges[i + 1]) for i in chosen], t_max=hi)


def trial_seeds(root_seed: int, trials: int):
    """Per-trial integer seeds spawned from the root SeedSequence."""
    children = np.random.SeedSequence(root_seed).spawn(trials)
    return [int(child.generate_state(1)[0]) for child in children]


def _run_trial(seed: int, N: int, M: int, interval, p: float, fraction: float, cells: int, freq_scale: float, C0: float):
    rng = np.random.default_rng(seed)
    r = ExpPolynomial.random(N, M, rng, freq_scale)
    E = random_subset(interval, fraction, cells, rng)
    ratio, bound = nazarov_turan_ratio(r, interval, E, p, C0)
    measure = E.lebesgue(interval[0], interval[1])
    return NazarovTuranTrial(
        seed=seed,
        N=N,
        M=M,
        interval_length=interval[1] - interval[0],
        set_measure=float(measure),
        ratio=ratio,
        bound=bound,
    )


def calibrate_nazarov_turan(
    trials: int,
    N: int,
    M: int,
    p: float = 2.0,
    seed: int | None = None,
    interval=(0.0, 1.0),
    set_fraction: float = 0.5,
    cells: int = 8,
    freq_scale: float = 4.0,
    C0: float | None = None,
    threads: int = 1,
) -> NazarovTuranCalibration:
    """Monte-Carlo search for the constant the bound needs on random exponential polynomials."""
    if trials < 1 or N < 1 or M < 1:
        raise InequalityError(f"need trials, N, M >= 1, got {trials}, {N}, {M}")
    p = _check_p(p)
    interval = _check_interval(interval)
    seed = settings.LAB_DEFAULT_SEED if seed is None else int(seed)
    C0 = settings.LAB_NT_C0 if C0 is None else float(C0)
    seeds = trial_seeds(seed, trials)
    logger.info(f"Nazarov-Turan calibration: {trials} trials, N={N}, M={M}, p={p}, root seed {seed}")

    def run(trial_seed):
        return _run_trial(trial_seed, N, M, interval, p, set_fraction, cells, freq_scale, C0)

    with ThreadPoolExecutor(max_workers=threads) as executor:
        records = list(executor.map(run, seeds))
    exponent = N * M - (p - 1.0) / p
    C0_needed = max(needed_constant(trial.ratio, exponent, trial.interval_length, trial.set_measure) for trial in records)
    calibration = NazarovTuranCalibration(
        trials=records,
        C0=C0,
        C0_needed=C0_needed,
        p=p,
        root_seed=seed,
        metadata={"N": N, "M": M, "interval": list(interval), "set_fraction": set_fraction, "cells": cells,
                  "freq_scale": freq_scale, "version": settings.LAB_VERSION},
    )
    if calibration.violations:
        logger.warning(f"{calibration.violations} of {trials} trials exceed the bound with C0={C0}")
    logger.info(f"Calibration finished: C0 needed {C0_needed:.4g}, max ratio {calibration.sidecar()['max_ratio']:.4g}")
    return calibration


def adversarial_nazarov_turan(
    N: int,
    M: int,
    interval,
    E: RadialSet,
    p: float = 2.0,
    seed: int | None = None,
    frequencies=None,
    initial: ExpPolynomial | None = None,
    restarts: int = 4,
    maxiter: int = 2000,
):
    """Largest ratio found by Nelder-Mead over the coefficients, frequencies held fixed.

    Returns the ratio and the maximizing exponential polynomial.
    """
    p = _check_p(p)
    lo, hi = _check_interval(interval)
    pieces, _ = set_pieces((lo, hi), E)
    rng = np.random.default_rng(settings.LAB_DEFAULT_SEED if seed is None else seed)
    if initial is not None:
        frequencies = initial.frequencies
        N, M = initial.N, initial.M
    elif frequencies is None:
        frequencies = rng.uniform(-4.0, 4.0, N)
    frequencies = np.asarray(frequencies, dtype=float)
    size = N * M

    def build(vector):
        return ExpPolynomial(frequencies, (vector[:size] + 1j * vector[size:]).reshape(N, M))

    def objective(vector):
        if not np.any(vector):
            return 0.0
        ratio = _ratio(build(vector), (lo, hi), pieces, p)
        return -math.log(ratio) if math.isfinite(ratio) else -700.0

    starts = [rng.normal(size=2 * size) for _ in range(restarts)]
    if initial is not None:
        starts[0] = np.concatenate((initial.coeffs.real.ravel(), initial.coeffs.imag.ravel()))
    best_value, best_vector = math.inf, None
    for index, start in enumerate(starts):
        result = minimize(objective, start, method="Nelder-Mead", options={"maxiter": maxiter, "xatol": 1e-9, "fatol": 1e-12})
        logger.debug(f"Adversarial restart {index}: ratio {math.exp(-result.fun):.6g} after {result.nit} iterations")
        if result.fun < best_value:
            best_value, best_vector = result.fun, result.x
    best = build(best_vector)
    ratio, _ = nazarov_turan_ratio(best, (lo, hi), E, p)
    logger.info(f"Adversarial search over {restarts} restarts: ratio {ratio:.6g}")
    return ratio, best
