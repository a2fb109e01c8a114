from fastapi import APIRouter, File, Form, HTTPException, UploadFile

from app.core.config import settings
from app.schemas.jobs import ScoreResponse
from app.services.evaluation_service import metric_config
from app.services.image_io_service import ImageFormatError, InvalidImageError, load_image
from app.services.metrics_service import MetricsError, aggregate, score_pair

router = APIRouter(prefix="/metrics", tags=["metrics"])


async def _read_upload(upload: UploadFile, label: str) -> bytes:
    raw = await upload.read()
    if not raw:
        raise HTTPException(status_code=400, detail=f"{label} file is empty")
    if len(raw) > settings.max_upload_size_mb * 1024 * 1024:
        raise HTTPException(status_code=413, detail=f"{label} file exceeds {settings.max_upload_size_mb} MB")
    return raw


@router.post("/score", response_model=ScoreResponse)
async def score_images(
    prediction: UploadFile = File(...),
    truth: UploadFile = File(...),
    model_name: str = Form(default="model"),
):
    pred_raw = await _read_upload(prediction, "prediction")
    truth_raw = await _read_upload(truth, "truth")
    try:
        pair = score_pair(load_image(pred_raw), load_image(truth_raw), metric_config())
        row = aggregate(model_name, [pair])
    except (ImageFormatError, InvalidImageError, MetricsError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return ScoreResponse(row=row, pair=pair)
