import logging

from celery import shared_task

from apps.damped_wave.study import run_job

logger = logging.getLogger(__name__)


@shared_task
def damped_wave_task(payload: dict) -> dict:
    """Celery task running one damped wave simulation.

    Args:
        payload: {"config": DampedWaveConfig.to_dict(), "seed": int}

    Returns:
        dict: abscissa, horizon, fits and the sampled energy trace
    """
    logger.info(f"Damped wave task: d={payload['config']['d']}, s={payload['config']['s']}")
    return run_job(payload)
