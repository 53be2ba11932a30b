import json
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from django.conf import settings

from apps.measure.models import RadialSet
from apps.pls.kappa import check_kappa_stability, kappa
from apps.pls.models import (
    ConcentrationError,
    ConcentrationProblem,
    OverlappingBandsError,
    SweepConfig,
    SweepEntry,
    SweepResult,
)

logger = logging.getLogger(__name__)

MAX_POSITION_DRAWS = 1000
DEFAULT_POSITION_SPREAD = 100.0
TAIL_BOUND_KIND = "tail_bound: 1 - lambda_min of the full-window Gram; envelope_tail: max mass fraction on [t_max/2, t_max]"


def entry_payload(alpha: float, positions, E: RadialSet, config: SweepConfig) -> dict:
    """JSON-ready description of one sweep entry."""
    positions = [float(p) for p in positions]
    return {
        "alpha": float(alpha),
        "positions": positions,
        "E": json.loads(E.to_json()),
        "band_dim": config.band_dim,
        "t_max": config.t_max,
        "tail_tolerance": config.tail_tolerance,
        "check_stability": config.check_stability,
    }


def evaluate_entry(payload: dict) -> SweepEntry:
    positions = tuple(payload["positions"])
    problem = ConcentrationProblem(
        alpha=payload["alpha"],
        bands=[(p, p + 1.0) for p in positions],
        E=RadialSet.from_dict(payload["E"]),
        band_dim=payload["band_dim"],
        t_max=payload["t_max"],
        tail_tolerance=payload["tail_tolerance"],
    )
    result = kappa(problem)
    entry = SweepEntry(
        R=max(positions),
        kappa=result.kappa,
        tail_bound=result.tail_bound,
        envelope_tail=result.envelope_tail,
        band_dim=result.band_dim,
        t_max=result.t_max,
        positions=positions,
    )
    if payload["check_stability"]:
        refined, converged = check_kappa_stability(problem, result)
        entry.kappa_refined = refined.kappa
        entry.converged = converged
    logger.debug(f"Entry at positions {positions}: kappa={entry.kappa:.6g}, tail={entry.tail_bound:.3e}")
    return entry


def _run_entries(payloads, config: SweepConfig):
    if config.use_celery:
        from celery import group

        from apps.pls.tasks import kappa_task

        logger.info(f"Dispatching {len(payloads)} kappa tasks through Celery")
        results = group(kappa_task.s(payload) for payload in payloads).apply_async().get()
        return [SweepEntry(**result) for result in results]
    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        return list(executor.map(evaluate_entry, payloads))


def _metadata(kind: str, alpha: float, E: RadialSet, config: SweepConfig, **extra) -> dict:
    return {
        "kind": kind,
        "alpha": float(alpha),
        "E": json.loads(E.to_json()),
        "E_description": E.describe(),
        "seed": config.seed,
        "band_dim": config.band_dim,
        "t_max": config.t_max,
        "tail_tolerance": config.tail_tolerance,
        "version": settings.LAB_VERSION,
        "tail_bound_kind": TAIL_BOUND_KIND,
        **extra,
    }


def sweep_R(alpha: float, E: RadialSet, R_list, config: SweepConfig | None = None) -> SweepResult:
    """kappa on the annulus band [R, R+1] for each R."""
    config = config or SweepConfig()
    R_list = [float(R) for R in R_list]
    if not R_list or any(R <= 0 for R in R_list) or any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ConcentrationError(f"R values must be positive and strictly ascending, got {R_list}")
    logger.info(f"Sweeping kappa over R={R_list} for alpha={alpha} on {E.describe()}")
    entries = _run_entries([entry_payload(alpha, [R], E, config) for R in R_list], config)
    result = SweepResult(entries=entries, metadata=_metadata("sweep_R", alpha, E, config, R_list=R_list))
    logger.info(f"Sweep finished: {result.summary()}")
    return result


def sample_positions(N: int, count: int, seed: int, spread: float = DEFAULT_POSITION_SPREAD):
    """count tuples of N band starts in [0, spread] with pairwise disjoint unit bands."""
    if spread < 2.0 * N:
        raise ConcentrationError(f"spread {spread} is too small to place {N} disjoint unit bands")
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(count):
        for _ in range(MAX_POSITION_DRAWS):
            starts = np.sort(rng.uniform(0.0, spread - 1.0, N))
            if np.all(np.diff(starts) >= 1.0):
                samples.append(tuple(float(s) for s in starts))
                break
        else:
            raise ConcentrationError(f"could not place {N} disjoint bands in [0, {spread}]")
    return samples


def _check_positions(N: int, positions) -> tuple:
    positions = tuple(sorted(float(p) for p in positions))
    if len(positions) != N:
        raise ConcentrationError(f"expected {N} band positions, got {len(positions)}")
    if any(p < 0 for p in positions):
        raise ConcentrationError(f"band positions must be nonnegative, got {positions}")
    for a, b in zip(positions, positions[1:]):
        if b - a < 1.0:
            raise OverlappingBandsError(f"bands starting at {a:g} and {b:g} overlap")
    return positions


def multiband_sweep(
    alpha: float,
    N: int,
    position_samples,
    E: RadialSet,
    config: SweepConfig | None = None,
    allow_any_order: bool = False,
    spread: float = DEFAULT_POSITION_SPREAD,
) -> SweepResult:
    """kappa on N disjoint unit bands, one entry per position tuple.

    position_samples is either a list of tuples or a count of seeded random tuples.
    Orders other than 1/2 + integer run only with allow_any_order.
    """
    config = config or SweepConfig()
    offset = alpha - 0.5
    if not allow_any_order and (offset < 0 or abs(offset - round(offset)) > 1e-12):
        raise ConcentrationError(f"multiband sweeps need alpha - 1/2 to be a nonnegative integer, got alpha={alpha}")
    if int(N) != N or N < 1:
        raise ConcentrationError(f"N must be a positive integer, got {N}")
    N = int(N)
    if isinstance(position_samples, int):
        samples = sample_positions(N, position_samples, config.seed, spread)
    else:
        samples = [_check_positions(N, positions) for positions in position_samples]
    if not samples:
        raise ConcentrationError("at least one position sample is required")
    logger.info(f"Multiband sweep: alpha={alpha}, N={N}, {len(samples)} position samples")
    entries = _run_entries([entry_payload(alpha, positions, E, config) for positions in samples], config)
    metadata = _metadata("multiband", alpha, E, config, N=N, allow_any_order=allow_any_order)
    result = SweepResult(entries=entries, metadata=metadata)
    logger.info(f"Multiband sweep finished: {result.summary()}")
    return result
