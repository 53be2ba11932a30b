import logging
from dataclasses import asdict

from celery import shared_task

from apps.pls.sweep import evaluate_entry

logger = logging.getLogger(__name__)


@shared_task
def kappa_task(payload: dict) -> dict:
    """Celery task computing one sweep entry.

    Args:
        payload: JSON description built by apps.pls.sweep.entry_payload

    Returns:
        dict: the SweepEntry fields
    """
    logger.info(f"kappa task for positions {payload.get('positions')}")
    entry = asdict(evaluate_entry(payload))
    entry["positions"] = list(entry["positions"])
    return entry
