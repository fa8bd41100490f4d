"""Instance segmentation model: Mask R-CNN over letterboxed square inputs.

The torchvision detection stack supplies RPN, RoIAlign, and the box/mask
heads; this module owns everything around it: backbone selection, the
letterbox input pipeline, mini-mask target storage, and mapping raw outputs
back into original image coordinates as Detection objects.

Ground-truth masks are stored as fixed-size mini masks (default 56 x 56)
registered to their boxes and are decoded back to the full frame when a
training batch is assembled, so memory stays flat no matter how large the
source images are.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn
from torchvision.models.detection import MaskRCNN
from torchvision.models.detection.anchor_utils import AnchorGenerator
from torchvision.models.detection.backbone_utils import resnet_fpn_backbone
from torchvision.ops import MultiScaleRoIAlign

from .. import geometry
from ..errors import CheckpointError, ConfigurationError, ContractError
from ..geometry import LetterboxTransform, MiniMask
from ..images import load_image_rgb
from ..ingest import DatasetManifest
from ..metrics import Detection
from . import runs

LABEL_TO_CLASS = {"healthy": 1, "diseased": 2}
CLASS_TO_LABEL = {v: k for k, v in LABEL_TO_CLASS.items()}

BACKBONES = ("resnet101", "resnet50", "resnet18", "tiny")


@dataclass(frozen=True)
class DetectorConfig:
    """Training and inference settings.

    The defaults describe the full-scale configuration (ResNet-101 at
    1024 x 1024, 60 epochs of SGD with momentum at batch size 2). The
    ``tiny`` backbone exists for CPU-bound smoke runs and demos.
    """

    backbone: str = "resnet101"
    input_size: int = 1024
    mini_mask_side: int = 56
    epochs: int = 60
    batch_size: int = 2
    learning_rate: float = 0.001
    momentum: float = 0.9
    optimizer: str = "sgd_momentum"
    grad_clip: float = 10.0
    pretrained_backbone: bool = False
    num_foreground_classes: int = 2
    checkpoint_every: int = 1
    score_floor: float = 0.05
    tiny_channels: int = 64

    def __post_init__(self) -> None:
        if self.backbone not in BACKBONES:
            raise ConfigurationError(
                f"backbone must be one of {list(BACKBONES)}, got {self.backbone!r}"
            )
        if self.input_size < 32:
            raise ConfigurationError(f"input_size must be >= 32, got {self.input_size}")
        if self.mini_mask_side < 8:
            raise ConfigurationError(f"mini_mask_side must be >= 8, got {self.mini_mask_side}")
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0.0 <= self.momentum < 1.0):
            raise ConfigurationError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.optimizer != "sgd_momentum":
            raise ConfigurationError(
                f"optimizer must be 'sgd_momentum', got {self.optimizer!r}"
            )
        if self.grad_clip <= 0:
            raise ConfigurationError(f"grad_clip must be > 0, got {self.grad_clip}")
        if self.num_foreground_classes != 2:
            raise ConfigurationError(
                "num_foreground_classes is pinned to 2 (healthy, diseased), "
                f"got {self.num_foreground_classes}"
            )
        if self.checkpoint_every < 1:
            raise ConfigurationError(f"checkpoint_every must be >= 1, got {self.checkpoint_every}")
        if not (0.0 <= self.score_floor <= 1.0):
            raise ConfigurationError(f"score_floor must be in [0, 1], got {self.score_floor}")
        if self.tiny_channels < 8:
            raise ConfigurationError(f"tiny_channels must be >= 8, got {self.tiny_channels}")


class TinyBackbone(nn.Module):
    """Three conv stages at stride 8, small enough to train on one CPU core."""

    def __init__(self, out_channels: int = 64):
        super().__init__()
        self.out_channels = out_channels
        self.body = nn.Sequential(
            nn.Conv2d(3, 32, 3, stride=2, padding=1),
            nn.BatchNorm2d(32),
            nn.ReLU(inplace=True),
            nn.Conv2d(32, 48, 3, stride=2, padding=1),
            nn.BatchNorm2d(48),
            nn.ReLU(inplace=True),
            nn.Conv2d(48, out_channels, 3, stride=2, padding=1),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
        )

    def forward(self, x: torch.Tensor) -> dict[str, torch.Tensor]:
        return {"0": self.body(x)}


def build_detector(config: DetectorConfig) -> MaskRCNN:
    """Assemble the Mask R-CNN for the configured backbone.

    The internal resize is pinned to the configured square size with
    identity normalization; all scaling happens in our own letterbox step
    so coordinates can be mapped back exactly.
    """
    num_classes = config.num_foreground_classes + 1  # plus background
    common = dict(
        num_classes=num_classes,
        min_size=config.input_size,
        max_size=config.input_size,
        image_mean=[0.0, 0.0, 0.0],
        image_std=[1.0, 1.0, 1.0],
    )
    if config.backbone == "tiny":
        return MaskRCNN(
            TinyBackbone(config.tiny_channels),
            rpn_anchor_generator=AnchorGenerator(
                sizes=((24, 48, 96, 160),), aspect_ratios=((0.5, 1.0, 2.0),)
            ),
            box_roi_pool=MultiScaleRoIAlign(["0"], output_size=7, sampling_ratio=2),
            mask_roi_pool=MultiScaleRoIAlign(["0"], output_size=14, sampling_ratio=2),
            rpn_pre_nms_top_n_train=600,
            rpn_post_nms_top_n_train=300,
            rpn_pre_nms_top_n_test=300,
            rpn_post_nms_top_n_test=100,
            rpn_batch_size_per_image=128,
            box_batch_size_per_image=64,
            box_score_thresh=config.score_floor,
            **common,
        )
    weights = "DEFAULT" if config.pretrained_backbone else None
    backbone = resnet_fpn_backbone(
        backbone_name=config.backbone, weights=weights, trainable_layers=5
    )
    return MaskRCNN(backbone, box_score_thresh=config.score_floor, **common)


@dataclass
class DetectorSample:
    """One training image with letterboxed targets and mini-mask storage."""

    image_id: str
    image: np.ndarray  # (S, S, 3) uint8
    boxes: list[tuple[float, float, float, float]]
    labels: list[int]
    mini_masks: list[MiniMask]
    transform: LetterboxTransform


@dataclass
class DetectorBundle:
    model: MaskRCNN
    config: DetectorConfig


def prepare_training_samples(
    manifest: DatasetManifest, config: DetectorConfig, *, root: Path | str
) -> list[DetectorSample]:
    """Build letterboxed training samples from annotated train records.

    Records without polygon annotations are skipped: there is nothing for
    the box or mask heads to learn from them. Polygons that vanish at the
    letterboxed resolution (sub-pixel after downscale) are dropped too.
    """
    root = Path(root)
    records = [r for r in manifest.records if r.split == "train"]
    if not records:
        records = list(manifest.records)

    samples: list[DetectorSample] = []
    size = config.input_size
    for record in records:
        annotations = manifest.annotations_for(record.image_id)
        if not annotations:
            continue
        image = load_image_rgb(root / record.file_path)
        boxed, transform = geometry.resize_letterbox(image, (size, size))
        boxes, labels, minis = [], [], []
        for ann in annotations:
            points = transform.apply_points(np.asarray(ann.points))
            mask = geometry.polygon_mask(points, (size, size))
            if not mask.any():
                continue
            box = transform.apply_box(ann.bbox)
            boxes.append(box)
            labels.append(LABEL_TO_CLASS[ann.label])
            minis.append(geometry.encode_mini_mask(mask, box, side=config.mini_mask_side))
        if boxes:
            samples.append(
                DetectorSample(
                    image_id=record.image_id,
                    image=boxed,
                    boxes=boxes,
                    labels=labels,
                    mini_masks=minis,
                    transform=transform,
                )
            )
    if not samples:
        raise ConfigurationError("no training records carry usable polygon annotations")
    return samples


def _sample_to_tensors(sample: DetectorSample, size: int):
    image = torch.from_numpy(sample.image.astype(np.float32) / 255.0).permute(2, 0, 1)
    masks = np.stack(
        [geometry.decode_mini_mask(m, (size, size)) for m in sample.mini_masks]
    )
    target = {
        "boxes": torch.tensor(sample.boxes, dtype=torch.float32),
        "labels": torch.tensor(sample.labels, dtype=torch.int64),
        "masks": torch.from_numpy(masks.astype(np.uint8)),
    }
    return image, target


def train_detector(
    manifest: DatasetManifest,
    config: DetectorConfig,
    seed: int,
    *,
    root: Path | str,
    run_dir: Path | str | None = None,
    run_id: str | None = None,
    progress=None,
) -> runs.TrainingRun:
    """Train from the manifest's annotated train records.

    One loss row per epoch with the component means; checkpoints land every
    ``config.checkpoint_every`` epochs plus always at the final epoch.
    """
    from ..ingest import split_fingerprint

    torch.manual_seed(seed)
    samples = prepare_training_samples(manifest, config, root=root)
    model = build_detector(config)

    run = runs.TrainingRun(
        run_id=run_id or runs.new_run_id("detector", seed),
        model_kind="detector",
        config=asdict(config),
        seed=seed,
        split_fingerprint=split_fingerprint(manifest) if manifest.split_seed is not None else None,
        run_dir=str(run_dir) if run_dir is not None else None,
    )
    runs.init_run_dir(run)

    if config.epochs == 0:
        runs.save_checkpoint(run, model, epoch=0)
        return run

    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.SGD(params, lr=config.learning_rate, momentum=config.momentum)
    order_rng = random.Random(seed)
    loss_keys = ("loss_classifier", "loss_box_reg", "loss_mask", "loss_objectness", "loss_rpn_box_reg")

    model.train()
    for epoch in range(1, config.epochs + 1):
        order = list(range(len(samples)))
        order_rng.shuffle(order)
        sums = {key: 0.0 for key in loss_keys}
        total = 0.0
        n_batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = [samples[i] for i in order[start : start + config.batch_size]]
            images, targets = zip(
                *(_sample_to_tensors(s, config.input_size) for s in batch)
            )
            loss_dict = model(list(images), list(targets))
            loss = sum(loss_dict.values())
            optimizer.zero_grad()
            loss.backward()
            nn.utils.clip_grad_norm_(params, config.grad_clip)
            optimizer.step()
            for key in loss_keys:
                value = loss_dict.get(key)
                if value is not None:
                    sums[key] += float(value.detach())
            total += float(loss.detach())
            n_batches += 1
        row = {"epoch": epoch, "total": total / n_batches}
        row.update({key: sums[key] / n_batches for key in loss_keys})
        run.losses.append(row)
        if progress is not None:
            progress(row)
        if epoch % config.checkpoint_every == 0 or epoch == config.epochs:
            runs.save_checkpoint(run, model, epoch=epoch)

    runs.write_loss_csv(run)
    return run


def load_detector(path: Path | str) -> DetectorBundle:
    payload = runs.load_checkpoint(path, expected_kind="detector")
    try:
        config = DetectorConfig(**payload["config"])
    except (TypeError, ConfigurationError) as exc:
        raise CheckpointError(f"checkpoint {path} has an invalid config: {exc}") from exc
    model = build_detector(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return DetectorBundle(model=model, config=config)


def detect(
    checkpoint: DetectorBundle | str | Path,
    image: np.ndarray,
    score_floor: float | None = None,
) -> list[Detection]:
    """Run inference on one RGB image of any size.

    Boxes and masks come back in the original image's pixel space, sorted by
    descending score, all boxes within image bounds. Detections that
    collapse to a degenerate box once mapped back are dropped.
    """
    bundle = checkpoint if isinstance(checkpoint, DetectorBundle) else load_detector(checkpoint)
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ContractError(f"expected an (H, W, 3) image, got shape {img.shape}")
    floor = bundle.config.score_floor if score_floor is None else float(score_floor)
    if not (0.0 <= floor <= 1.0):
        raise ContractError(f"score_floor must be in [0, 1], got {floor}")

    size = bundle.config.input_size
    boxed, transform = geometry.resize_letterbox(img, (size, size))
    tensor = torch.from_numpy(boxed.astype(np.float32) / 255.0).permute(2, 0, 1)

    bundle.model.eval()
    with torch.no_grad():
        output = bundle.model([tensor])[0]

    height, width = img.shape[0], img.shape[1]
    detections: list[Detection] = []
    for k in range(len(output["scores"])):
        score = float(output["scores"][k])
        if score < floor:
            continue
        class_id = int(output["labels"][k])
        label = CLASS_TO_LABEL.get(class_id)
        if label is None:
            continue
        raw_box = tuple(float(v) for v in output["boxes"][k])
        if not (raw_box[0] < raw_box[2] and raw_box[1] < raw_box[3]):
            continue
        box = transform.invert_box(raw_box)
        if box[2] - box[0] < 1e-6 or box[3] - box[1] < 1e-6:
            continue
        mask_letterbox = output["masks"][k, 0].numpy() >= 0.5
        mask = transform.invert_mask(mask_letterbox)
        detections.append(
            Detection(label=label, score=min(score, 1.0), bbox=box, mask=mask)
        )
    detections.sort(key=lambda d: -d.score)
    return detections


def predict_manifest(
    checkpoint: DetectorBundle | str | Path,
    manifest: DatasetManifest,
    *,
    root: Path | str,
    split: str = "test",
    score_floor: float | None = None,
) -> dict[str, list[Detection]]:
    """Detections for every record in a split (all records if unassigned)."""
    bundle = checkpoint if isinstance(checkpoint, DetectorBundle) else load_detector(checkpoint)
    root = Path(root)
    records = [r for r in manifest.records if r.split == split]
    if not records and split == "test":
        records = list(manifest.records)
    return {
        record.image_id: detect(bundle, load_image_rgb(root / record.file_path), score_floor)
        for record in records
    }
