from app.schemas.dataset import DatasetManifest, DistortionParams, ManifestHeader, ManifestRecord
from app.schemas.jobs import GenerateJobRequest, JobAccepted, JobStatus, ScoreResponse
from app.schemas.metrics import MetricConfig, MetricsReport, MetricsRow, PairMetrics
from app.schemas.run import RunConfig
from app.schemas.training import (
    CycleGanConfig,
    ModelBundleConfig,
    PatchDiscriminatorConfig,
    TrainConfig,
    UNetConfig,
)

__all__ = [
    "DatasetManifest",
    "DistortionParams",
    "ManifestHeader",
    "ManifestRecord",
    "GenerateJobRequest",
    "JobAccepted",
    "JobStatus",
    "ScoreResponse",
    "MetricConfig",
    "MetricsReport",
    "MetricsRow",
    "PairMetrics",
    "RunConfig",
    "CycleGanConfig",
    "ModelBundleConfig",
    "PatchDiscriminatorConfig",
    "TrainConfig",
    "UNetConfig",
]
