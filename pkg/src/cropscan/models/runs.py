"""Training run bookkeeping: run directories, loss traces, checkpoints.

A run directory looks like::

    <run_dir>/
      config.json            config + seed + split fingerprint
      loss.csv               one row per epoch
      checkpoints/
        epoch_0001.pt
        ...
"""

from __future__ import annotations

import csv
import dataclasses
import json
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import torch

from ..errors import CheckpointError

MODEL_KINDS = ("classifier", "detector")


@dataclass
class TrainingRun:
    run_id: str
    model_kind: str
    config: dict
    seed: int
    split_fingerprint: str | None = None
    losses: list[dict] = field(default_factory=list)
    run_dir: str | None = None
    checkpoint_paths: list[str] = field(default_factory=list)

    @property
    def final_checkpoint(self) -> str | None:
        return self.checkpoint_paths[-1] if self.checkpoint_paths else None


def new_run_id(model_kind: str, seed: int) -> str:
    return f"{model_kind}-seed{seed}-{uuid.uuid4().hex[:8]}"


def init_run_dir(run: TrainingRun) -> Path | None:
    if run.run_dir is None:
        return None
    run_dir = Path(run.run_dir)
    (run_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(
        json.dumps(
            {
                "run_id": run.run_id,
                "model_kind": run.model_kind,
                "seed": run.seed,
                "split_fingerprint": run.split_fingerprint,
                "config": run.config,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return run_dir


def write_loss_csv(run: TrainingRun) -> None:
    if run.run_dir is None or not run.losses:
        return
    columns = list(run.losses[0].keys())
    with open(Path(run.run_dir) / "loss.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(run.losses)


def save_checkpoint(
    run: TrainingRun, model: torch.nn.Module, epoch: int
) -> str | None:
    """Persist model weights for one epoch; returns the file path."""
    if run.run_dir is None:
        return None
    path = Path(run.run_dir) / "checkpoints" / f"epoch_{epoch:04d}.pt"
    torch.save(
        {
            "model_kind": run.model_kind,
            "config": run.config,
            "state_dict": model.state_dict(),
            "run_id": run.run_id,
            "epoch": epoch,
        },
        path,
    )
    run.checkpoint_paths.append(str(path))
    return str(path)


def load_checkpoint(path: Path | str, expected_kind: str | None = None) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint does not exist: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"checkpoint {path} could not be loaded: {exc}") from exc
    if not isinstance(payload, dict) or "state_dict" not in payload or "model_kind" not in payload:
        raise CheckpointError(f"checkpoint {path} is missing required entries")
    if expected_kind is not None and payload["model_kind"] != expected_kind:
        raise CheckpointError(
            f"checkpoint {path} holds a {payload['model_kind']!r} model, "
            f"expected {expected_kind!r}"
        )
    return payload


def latest_checkpoint(run_dir: Path | str) -> Path:
    """Newest epoch checkpoint under a run directory."""
    ckpt_dir = Path(run_dir) / "checkpoints"
    candidates = sorted(ckpt_dir.glob("epoch_*.pt")) if ckpt_dir.is_dir() else []
    if not candidates:
        raise CheckpointError(f"no checkpoints under {run_dir}")
    return candidates[-1]
