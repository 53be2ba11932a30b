import logging
from concurrent.futures import ThreadPoolExecutor

from django.conf import settings

from apps.damped_wave.models import DampedWaveConfig, EnergyTrace
from apps.damped_wave.simulation import (
    MIN_FIT_SAMPLES,
    build_generator,
    evolve,
    fit_decay,
    initial_data,
    spectral_abscissa,
    wave_horizon,
)

logger = logging.getLogger(__name__)


def run_job(payload: dict) -> dict:
    """One simulation: abscissa, horizon, trace and the decay fits on the pre-horizon window."""
    config = DampedWaveConfig.from_dict(payload["config"])
    generator = build_generator(config)
    trace = evolve(generator, initial_data(generator, payload["seed"]))
    horizon = wave_horizon(generator)
    window = (0.0, min(config.t_final, horizon))
    fits = {}
    models = ("exp", "poly") if 0 < config.s < 2 else ("exp",)
    if len(trace.window(*window)) >= MIN_FIT_SAMPLES:
        for model in models:
            fits[model] = fit_decay(trace, model, window=window)
    else:
        logger.warning(f"Pre-horizon window {window} holds too few samples to fit a decay rate")
    return {
        "config": payload["config"],
        "seed": payload["seed"],
        "abscissa": spectral_abscissa(generator),
        "horizon": horizon,
        "fits": fits,
        "times": trace.times.tolist(),
        "energies": trace.energies.tolist(),
    }


def study(configs, seed: int | None = None, threads: int = 1, use_celery: bool | None = None):
    """Run several configurations; results come back in input order."""
    seed = settings.LAB_DEFAULT_SEED if seed is None else seed
    use_celery = settings.LAB_USE_CELERY if use_celery is None else use_celery
    payloads = [{"config": config.to_dict(), "seed": seed} for config in configs]
    logger.info(f"Damped wave study over {len(payloads)} configurations")
    if use_celery:
        from celery import group

        from apps.damped_wave.tasks import damped_wave_task

        results = group(damped_wave_task.s(payload) for payload in payloads).apply_async().get()
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(run_job, payloads))
    for result in results:
        result["trace"] = EnergyTrace(times=result.pop("times"), energies=result.pop("energies"), fitted=result["fits"])
    return results
