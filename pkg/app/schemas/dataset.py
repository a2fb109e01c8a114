"""Pydantic models for distortion parameters and the dataset manifest."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

PatternClass = Literal["arch", "loop", "whorl"]
Split = Literal["train", "val", "test"]
GtPose = Literal["aligned", "master"]

PATTERN_CLASSES: tuple[PatternClass, ...] = ("arch", "loop", "whorl")
SPLITS: tuple[Split, ...] = ("train", "val", "test")

MANIFEST_VERSION = 1


class DistortionParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    blur_sigma: float = Field(default=0.0, ge=0.0)
    noise_sigma: float = Field(default=0.0, ge=0.0)
    rotation_deg: float = Field(default=0.0, ge=-10.0, le=10.0)
    translation_px: tuple[int, int] = (0, 0)
    scratch_count: int = Field(default=0, ge=0)
    scratch_width_px: float = Field(default=1.0, gt=0.0)
    occlusion_fraction: float = Field(default=0.0, ge=0.0, lt=1.0)

    @field_validator("translation_px")
    @classmethod
    def check_translation(cls, value: tuple[int, int]) -> tuple[int, int]:
        if any(abs(component) > 10 for component in value):
            raise ValueError("translation components must lie in [-10, 10]")
        return value


class ManifestHeader(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: int = MANIFEST_VERSION
    alpha: float = Field(ge=0.0, le=1.0)
    counts: dict[Split, int]
    width: int = Field(default=275, ge=1)
    height: int = Field(default=400, ge=1)
    gt_pose: GtPose = "aligned"


class ManifestRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    split: Split
    clean_path: str
    noisy_path: str
    master_seed: int = Field(ge=0)
    pattern_class: PatternClass
    texture_id: str
    alpha: float = Field(ge=0.0, le=1.0)
    distortion: DistortionParams


class DatasetManifest(BaseModel):
    header: ManifestHeader
    records: list[ManifestRecord] = Field(default_factory=list)

    def split(self, name: Split) -> list[ManifestRecord]:
        return [record for record in self.records if record.split == name]
