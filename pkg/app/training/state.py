"""
Training run state dataclasses.

Plain dataclasses passed between the sampler, the trainers and the
history writer; nothing here touches the filesystem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class PairedImages:
    """Aligned noisy inputs and clean targets of one split."""

    ids: list[str]
    noisy: list[np.ndarray]
    clean: list[np.ndarray]

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class Batch:
    noisy: np.ndarray  # (N, 1, S, S) float32
    clean: np.ndarray  # (N, 1, S, S) float32


@dataclass
class HistoryRow:
    step: int
    epoch: int
    lr: float
    losses: dict[str, float]


@dataclass
class TrainingHistory:
    loss_names: list[str]
    rows: list[HistoryRow] = field(default_factory=list)

    def append(self, row: HistoryRow) -> None:
        self.rows.append(row)

    def column(self, name: str) -> list[float]:
        return [row.losses[name] for row in self.rows]

    def to_tsv(self) -> str:
        lines = ["\t".join(["step", "epoch", "lr", *self.loss_names])]
        for row in self.rows:
            values = [f"{row.losses[name]:.8f}" for name in self.loss_names]
            lines.append("\t".join([str(row.step), str(row.epoch), f"{row.lr:.8g}", *values]))
        return "\n".join(lines) + "\n"


@dataclass
class TrainingResult:
    checkpoint_path: Path
    history_path: Path
    history: TrainingHistory
    params: dict[str, np.ndarray]
