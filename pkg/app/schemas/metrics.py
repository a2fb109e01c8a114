from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator

TSV_HEADER = "model\tmse\tpsnr_db\tssim"


class MetricConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    max_value: float = Field(default=1.0, gt=0.0)
    ssim_window: int = Field(default=11, ge=3)
    k1: float = Field(default=0.01, gt=0.0)
    k2: float = Field(default=0.03, gt=0.0)
    mse_floor: float = Field(default=1e-12, gt=0.0)

    @field_validator("ssim_window")
    @classmethod
    def check_odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("ssim_window must be odd")
        return value


class PairMetrics(BaseModel):
    mse: float
    psnr_db: float
    ssim: float


class MetricsRow(BaseModel):
    model_name: str
    mean_mse: float
    mean_psnr_db: float
    mean_ssim: float = Field(ge=-1.0, le=1.0)


class MetricsReport(BaseModel):
    rows: list[MetricsRow] = Field(default_factory=list)
    per_pair: dict[str, list[PairMetrics]] | None = None

    def row(self, model_name: str) -> MetricsRow:
        for row in self.rows:
            if row.model_name == model_name:
                return row
        raise KeyError(model_name)

    def to_tsv(self) -> str:
        lines = [TSV_HEADER]
        for row in self.rows:
            lines.append(
                f"{row.model_name}\t{row.mean_mse:.6f}\t{row.mean_psnr_db:.6f}\t{row.mean_ssim:.6f}"
            )
        return "\n".join(lines) + "\n"

    def render_table(self) -> str:
        """Model | MSE | PSNR | SSIM table for console output."""
        header = ("Model", "MSE", "PSNR", "SSIM")
        body = [
            (row.model_name, f"{row.mean_mse:.4f}", f"{row.mean_psnr_db:.4f}", f"{row.mean_ssim:.4f}")
            for row in self.rows
        ]
        widths = [max(len(line[col]) for line in [header, *body]) for col in range(4)]
        rendered = [
            " | ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip()
            for line in [header, *body]
        ]
        rendered.insert(1, "-+-".join("-" * width for width in widths))
        return "\n".join(rendered)
