"""Binary image classifier: stacked conv blocks ending in a sigmoid.

Each block is Conv -> BatchNorm -> ReLU -> MaxPool. A single dense layer
maps the flattened features to one logit; probability 0.5 or higher reads
as diseased.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn
from torch.optim import swa_utils

from .. import geometry
from ..errors import CheckpointError, ConfigurationError, ContractError
from ..images import load_image_rgb
from ..ingest import DatasetManifest, split_fingerprint
from . import runs

POSITIVE_LABEL = "diseased"
NEGATIVE_LABEL = "healthy"


@dataclass(frozen=True)
class ClassifierConfig:
    conv_blocks: int = 3
    base_channels: int = 16
    input_size: int = 256
    epochs: int = 30
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 32
    checkpoint_every: int = 1

    def __post_init__(self) -> None:
        if self.conv_blocks < 1:
            raise ConfigurationError(f"conv_blocks must be >= 1, got {self.conv_blocks}")
        if self.base_channels < 1:
            raise ConfigurationError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.input_size < 2**self.conv_blocks:
            raise ConfigurationError(
                f"input_size {self.input_size} too small for {self.conv_blocks} pooling stages"
            )
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.optimizer != "adam":
            raise ConfigurationError(f"optimizer must be 'adam', got {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.checkpoint_every < 1:
            raise ConfigurationError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")


class LeafClassifier(nn.Module):
    def __init__(self, config: ClassifierConfig):
        super().__init__()
        blocks = []
        in_ch = 3
        out_ch = config.base_channels
        for _ in range(config.conv_blocks):
            blocks += [
                nn.Conv2d(in_ch, out_ch, kernel_size=3, padding=1),
                nn.BatchNorm2d(out_ch),
                nn.ReLU(inplace=True),
                nn.MaxPool2d(2),
            ]
            in_ch = out_ch
            out_ch *= 2
        self.features = nn.Sequential(*blocks)
        side = config.input_size // (2**config.conv_blocks)
        self.head = nn.Linear(in_ch * side * side, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Returns raw logits of shape (batch,). Apply sigmoid for probability."""
        feats = self.features(x)
        return self.head(feats.flatten(1)).squeeze(-1)


@dataclass
class ClassifierBundle:
    model: LeafClassifier
    config: ClassifierConfig


def build_classifier(config: ClassifierConfig) -> LeafClassifier:
    return LeafClassifier(config)


def preprocess_for_classifier(image: np.ndarray, config: ClassifierConfig) -> torch.Tensor:
    """Letterbox to the configured square input and scale to [0, 1] CHW."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ContractError(f"expected an (H, W, 3) image, got shape {img.shape}")
    boxed, _ = geometry.resize_letterbox(img, (config.input_size, config.input_size))
    tensor = torch.from_numpy(boxed.astype(np.float32) / 255.0)
    return tensor.permute(2, 0, 1)


def label_from_probability(probability: float) -> str:
    # exactly 0.5 counts as diseased: err toward flagging
    return POSITIVE_LABEL if probability >= 0.5 else NEGATIVE_LABEL


def classify(
    checkpoint: ClassifierBundle | str | Path, image: torch.Tensor
) -> tuple[str, float]:
    """Classify one preprocessed image tensor.

    ``image`` must already match the model's input size (see
    :func:`preprocess_for_classifier`); a mismatched shape is a contract
    violation, not something silently resized.
    """
    bundle = checkpoint if isinstance(checkpoint, ClassifierBundle) else load_classifier(checkpoint)
    expected = (3, bundle.config.input_size, bundle.config.input_size)
    if tuple(image.shape) != expected:
        raise ContractError(f"image tensor shape {tuple(image.shape)} != expected {expected}")
    bundle.model.eval()
    with torch.no_grad():
        logit = bundle.model(image.unsqueeze(0))[0]
        probability = float(torch.sigmoid(logit))
    return label_from_probability(probability), probability


def load_classifier(path: Path | str) -> ClassifierBundle:
    payload = runs.load_checkpoint(path, expected_kind="classifier")
    try:
        config = ClassifierConfig(**payload["config"])
    except (TypeError, ConfigurationError) as exc:
        raise CheckpointError(f"checkpoint {path} has an invalid config: {exc}") from exc
    model = build_classifier(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return ClassifierBundle(model=model, config=config)


def _training_records(manifest: DatasetManifest):
    records = [r for r in manifest.records if r.split == "train"]
    if not records:
        records = list(manifest.records)
    return records


def train_classifier(
    manifest: DatasetManifest,
    config: ClassifierConfig,
    seed: int,
    *,
    root: Path | str,
    run_dir: Path | str | None = None,
    run_id: str | None = None,
) -> runs.TrainingRun:
    """Train on the manifest's train split (all records if none assigned).

    Deterministic for a fixed seed: weight init, batch order, and the
    resulting loss trace are reproducible on the same machine.
    """
    records = _training_records(manifest)
    labels = {r.image_label for r in records}
    if len(labels) < 2:
        raise ConfigurationError(
            f"training needs both classes, found only {sorted(labels)}"
        )

    root = Path(root)
    torch.manual_seed(seed)
    model = build_classifier(config)

    inputs = torch.stack(
        [preprocess_for_classifier(load_image_rgb(root / r.file_path), config) for r in records]
    )
    targets = torch.tensor(
        [1.0 if r.image_label == POSITIVE_LABEL else 0.0 for r in records]
    )

    run = runs.TrainingRun(
        run_id=run_id or runs.new_run_id("classifier", seed),
        model_kind="classifier",
        config=asdict(config),
        seed=seed,
        split_fingerprint=split_fingerprint(manifest) if manifest.split_seed is not None else None,
        run_dir=str(run_dir) if run_dir is not None else None,
    )
    runs.init_run_dir(run)

    criterion = nn.BCEWithLogitsLoss()
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    order_rng = random.Random(seed)
    n = len(records)

    if config.epochs == 0:
        runs.save_checkpoint(run, model, epoch=0)
        return run

    for epoch in range(1, config.epochs + 1):
        model.train()
        order = list(range(n))
        order_rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            optimizer.zero_grad()
            logits = model(inputs[batch])
            loss = criterion(logits, targets[batch])
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(batch)
        # batch-norm running stats lag the fast-moving weights on tiny
        # datasets, which wrecks eval-mode predictions; recompute them
        # under the current weights before anything evaluates or saves
        swa_utils.update_bn(
            (inputs[i : i + config.batch_size] for i in range(0, n, config.batch_size)),
            model,
        )
        model.eval()
        with torch.no_grad():
            predictions = (torch.sigmoid(model(inputs)) >= 0.5).float()
            accuracy = float((predictions == targets).float().mean())
        run.losses.append(
            {"epoch": epoch, "total": epoch_loss / n, "train_accuracy": accuracy}
        )
        if epoch % config.checkpoint_every == 0 or epoch == config.epochs:
            runs.save_checkpoint(run, model, epoch=epoch)

    runs.write_loss_csv(run)
    return run


def training_accuracy(
    bundle: ClassifierBundle, manifest: DatasetManifest, root: Path | str
) -> float:
    """Fraction of the train split the trained model labels correctly."""
    records = _training_records(manifest)
    root = Path(root)
    correct = 0
    for record in records:
        tensor = preprocess_for_classifier(load_image_rgb(root / record.file_path), bundle.config)
        label, _ = classify(bundle, tensor)
        correct += int(label == record.image_label)
    return correct / len(records)
