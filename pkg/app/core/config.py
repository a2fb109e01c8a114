from functools import lru_cache
from typing import Annotated, Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, NoDecode, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="FPFORGE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    app_name: str = "fpforge"
    app_version: str = "0.1.0"
    app_env: str = "development"
    debug: bool = False
    log_level: str = "INFO"
    api_v1_prefix: str = "/api/v1"
    allowed_origins: Annotated[list[str], NoDecode] = Field(
        default_factory=lambda: ["http://localhost:3000"]
    )
    max_upload_size_mb: int = 20

    # Dataset forge
    image_width: int = 275
    image_height: int = 400
    blend_alpha: float = 0.45
    dataset_count: int = 100
    full_scale_dataset_count: int = 100_000
    split_ratios: tuple[int, int, int] = (7, 1, 2)
    gt_pose: Literal["aligned", "master"] = "aligned"
    procedural_texture_count: int = 16
    allow_procedural_fallback: bool = True
    generate_workers: int = 1

    # Metrics
    psnr_mse_floor: float = 1e-12
    ssim_window: int = 11
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    eval_workers: int = 1

    # Desk-scale training
    train_input_size: int = 64
    train_steps: int = 200
    train_batch_size: int = 8
    train_lr: float = 1e-4
    train_epochs: int = 30
    unet_depth: int = 3
    unet_base_channels: int = 8
    disc_layers: int = 3
    disc_base_channels: int = 8
    pix2pix_l1_weight: float = 100.0
    cycle_weight: float = 10.0

    celery_broker_url: str = "redis://localhost:6379/0"
    celery_result_backend: str = "redis://localhost:6379/0"

    @field_validator("allowed_origins", mode="before")
    @classmethod
    def parse_allowed_origins(cls, value: str | list[str]) -> list[str]:
        if isinstance(value, str):
            return [origin.strip() for origin in value.split(",") if origin.strip()]
        return value

    @field_validator("blend_alpha")
    @classmethod
    def check_alpha(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError("blend_alpha must lie in [0, 1]")
        return value


@lru_cache
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
