import logging
from typing import Any

from celery import Celery

from app.core.config import get_settings, settings
from app.schemas.run import RunConfig
from app.services.dataset_service import cmd_generate
from app.services.evaluation_service import cmd_eval

logger = logging.getLogger(__name__)

celery_app = Celery(
    "fpforge",
    broker=settings.celery_broker_url,
    backend=settings.celery_result_backend,
)


@celery_app.task(name="fpforge.generate_dataset")
def generate_dataset_task(overrides: dict[str, Any]) -> dict[str, Any]:
    cfg = RunConfig.resolve(get_settings(), overrides=overrides)
    manifest = cmd_generate(cfg)
    logger.info("Job finished: %d records in %s", len(manifest.records), cfg.out)
    return {"out": str(cfg.out), "counts": manifest.header.counts}


@celery_app.task(name="fpforge.evaluate")
def evaluate_task(overrides: dict[str, Any]) -> dict[str, Any]:
    cfg = RunConfig.resolve(get_settings(), overrides=overrides)
    report = cmd_eval(cfg)
    return {"report": report.to_tsv(), "rows": [row.model_dump() for row in report.rows]}
