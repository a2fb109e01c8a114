from typing import Any

from pydantic import BaseModel, Field

from app.schemas.metrics import MetricsRow, PairMetrics


class GenerateJobRequest(BaseModel):
    seed: int = Field(ge=0)
    count: int = Field(default=10, ge=0, le=10_000)
    out: str = Field(min_length=1)
    width: int | None = Field(default=None, ge=64)
    height: int | None = Field(default=None, ge=64)


class EvalJobRequest(BaseModel):
    manifest: str = Field(min_length=1)
    checkpoint: str = Field(min_length=1)
    out: str = Field(min_length=1)
    seed: int = Field(default=0, ge=0)
    write_strips: bool = False


class JobAccepted(BaseModel):
    task_id: str
    status: str


class JobStatus(BaseModel):
    task_id: str
    status: str
    result: dict[str, Any] | None = None


class ScoreResponse(BaseModel):
    row: MetricsRow
    pair: PairMetrics
