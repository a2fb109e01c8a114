from celery.result import AsyncResult
from fastapi import APIRouter

from app.schemas.jobs import EvalJobRequest, GenerateJobRequest, JobAccepted, JobStatus
from app.workers.celery_worker import celery_app, evaluate_task, generate_dataset_task

router = APIRouter(prefix="/jobs", tags=["jobs"])


@router.post("/generate", response_model=JobAccepted, status_code=202)
def submit_generate(payload: GenerateJobRequest):
    task = generate_dataset_task.delay(payload.model_dump(exclude_none=True))
    return JobAccepted(task_id=task.id, status="queued")


@router.post("/eval", response_model=JobAccepted, status_code=202)
def submit_eval(payload: EvalJobRequest):
    task = evaluate_task.delay(payload.model_dump())
    return JobAccepted(task_id=task.id, status="queued")


@router.get("/{task_id}", response_model=JobStatus)
def job_status(task_id: str):
    result = AsyncResult(task_id, app=celery_app)
    payload = result.result if result.successful() else None
    if result.failed():
        payload = {"error": str(result.result)}
    return JobStatus(task_id=task_id, status=result.status.lower(), result=payload)
