"""Detection and classification metrics.

Matching is greedy in detection-score order: each detection takes the
highest-IoU unmatched ground truth of the same label at or above the IoU
threshold. Average precision integrates the precision envelope over the
achieved recall points, and mAP averages per-class AP over classes that
have at least one ground truth instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import geometry
from .errors import ContractError
from .geometry import Box, MiniMask

POSITIVE_LABEL = "diseased"
NEGATIVE_LABEL = "healthy"


@dataclass(frozen=True)
class Detection:
    """One predicted instance: label, confidence, box, optional mask.

    The mask may be a full-frame bool array, a mini mask, or an RLE
    document (handy when detections are rehydrated from a predictions
    file); :meth:`full_mask` materializes whichever form is present.
    """

    label: str
    score: float
    bbox: Box
    mask: np.ndarray | MiniMask | dict | None = None

    def __post_init__(self) -> None:
        if self.label not in (POSITIVE_LABEL, NEGATIVE_LABEL):
            raise ContractError(f"detection label {self.label!r} not recognized")
        if not (0.0 <= self.score <= 1.0):
            raise ContractError(f"detection score must be in [0, 1], got {self.score}")
        object.__setattr__(self, "bbox", geometry.validate_box(self.bbox))

    def full_mask(self, dims: tuple[int, int]) -> np.ndarray:
        """Materialize the mask at ``(width, height)`` image dims."""
        if self.mask is None:
            raise ContractError(f"detection {self.label}@{self.score:.2f} carries no mask")
        if isinstance(self.mask, MiniMask):
            return geometry.decode_mini_mask(self.mask, dims)
        mask = geometry.decode_rle(self.mask) if isinstance(self.mask, dict) else None
        if mask is None:
            mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (dims[1], dims[0]):
            raise ContractError(
                f"mask shape {mask.shape} does not match image dims {(dims[1], dims[0])}"
            )
        return mask


@dataclass(frozen=True)
class GroundTruth:
    label: str
    bbox: Box
    mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.label not in (POSITIVE_LABEL, NEGATIVE_LABEL):
            raise ContractError(f"ground truth label {self.label!r} not recognized")
        object.__setattr__(self, "bbox", geometry.validate_box(self.bbox))


@dataclass(frozen=True)
class MatchResult:
    """Pairs are (detection_index, truth_index, iou)."""

    pairs: tuple[tuple[int, int, float], ...]
    unmatched_detections: tuple[int, ...]
    unmatched_truths: tuple[int, ...]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ContractError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate: bool = False
    map_50: float | None = None
    per_class_ap: dict[str, float] = field(default_factory=dict)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def classification_metrics(counts: ConfusionCounts) -> MetricsReport:
    """Accuracy, precision, recall, F1 from confusion counts.

    Any division by zero yields 0.0 for that metric and sets the
    ``degenerate`` flag instead of raising.
    """
    if counts.total == 0:
        raise ContractError("cannot compute metrics over zero samples")
    degenerate = False
    accuracy = (counts.tp + counts.tn) / counts.total
    if counts.tp + counts.fp == 0:
        precision, degenerate = 0.0, True
    else:
        precision = counts.tp / (counts.tp + counts.fp)
    if counts.tp + counts.fn == 0:
        recall, degenerate = 0.0, True
    else:
        recall = counts.tp / (counts.tp + counts.fn)
    return MetricsReport(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        degenerate=degenerate,
    )


def _pair_iou(
    det: Detection,
    truth: GroundTruth,
    iou_kind: str,
    dims: tuple[int, int] | None,
) -> float:
    if iou_kind == "box":
        return geometry.box_iou(det.bbox, truth.bbox)
    if iou_kind == "mask":
        if truth.mask is None:
            raise ContractError("mask IoU requested but ground truth carries no mask")
        truth_mask = np.asarray(truth.mask, dtype=bool)
        mask_dims = dims if dims is not None else (truth_mask.shape[1], truth_mask.shape[0])
        return geometry.mask_iou(det.full_mask(mask_dims), truth_mask)
    raise ContractError(f"iou_kind must be 'box' or 'mask', got {iou_kind!r}")


def match_detections(
    detections: Sequence[Detection],
    truths: Sequence[GroundTruth],
    iou_threshold: float = 0.5,
    iou_kind: str = "box",
    dims: tuple[int, int] | None = None,
) -> MatchResult:
    """Greedy one-to-one matching of detections to same-label ground truths.

    Detections are visited in descending score order (ties broken by the
    original detection index, ascending). Each takes the unmatched truth of
    its own label with the highest IoU, provided that IoU reaches the
    threshold. ``dims`` is only needed for ``iou_kind='mask'`` when
    detections carry mini masks.
    """
    if not (0.0 < iou_threshold <= 1.0):
        raise ContractError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].score, i))
    taken: set[int] = set()
    pairs: list[tuple[int, int, float]] = []
    for det_index in order:
        det = detections[det_index]
        best_iou = 0.0
        best_truth = -1
        for truth_index, truth in enumerate(truths):
            if truth_index in taken or truth.label != det.label:
                continue
            iou = _pair_iou(det, truth, iou_kind, dims)
            if iou > best_iou:
                best_iou = iou
                best_truth = truth_index
        if best_truth >= 0 and best_iou >= iou_threshold:
            taken.add(best_truth)
            pairs.append((det_index, best_truth, best_iou))
    matched_dets = {p[0] for p in pairs}
    return MatchResult(
        pairs=tuple(sorted(pairs)),
        unmatched_detections=tuple(i for i in range(len(detections)) if i not in matched_dets),
        unmatched_truths=tuple(i for i in range(len(truths)) if i not in taken),
    )


def average_precision(
    detections_by_image: Mapping[str, Sequence[Detection]],
    truths_by_image: Mapping[str, Sequence[GroundTruth]],
    label: str,
    iou_threshold: float = 0.5,
    iou_kind: str = "box",
    dims_by_image: Mapping[str, tuple[int, int]] | None = None,
) -> float:
    """AP for one class over a whole dataset.

    Matching runs per image; the dataset-wide detection list is then sorted
    by score and swept to build the precision-recall staircase. Precision is
    replaced by its running envelope (the maximum precision at any recall at
    least as large) and integrated over the achieved recall points.
    """
    n_truths = sum(
        sum(1 for t in truths if t.label == label) for truths in truths_by_image.values()
    )
    if n_truths == 0:
        raise ContractError(f"no ground truth instances for label {label!r}")

    scored: list[tuple[float, int, bool]] = []  # (score, tiebreak, is_true_positive)
    tiebreak = 0
    for image_id, dets in detections_by_image.items():
        truths = list(truths_by_image.get(image_id, ()))
        class_det_indices = [i for i, d in enumerate(dets) if d.label == label]
        dims = dims_by_image.get(image_id) if dims_by_image else None
        result = match_detections(
            list(dets), truths, iou_threshold=iou_threshold, iou_kind=iou_kind, dims=dims
        )
        matched = {det_index for det_index, _, _ in result.pairs}
        for det_index in class_det_indices:
            scored.append((dets[det_index].score, tiebreak, det_index in matched))
            tiebreak += 1
    if not scored:
        return 0.0

    scored.sort(key=lambda item: (-item[0], item[1]))
    tp = np.cumsum([1 if hit else 0 for _, _, hit in scored])
    fp = np.cumsum([0 if hit else 1 for _, _, hit in scored])
    recall = tp / n_truths
    precision = tp / (tp + fp)

    # precision envelope: best precision at this recall or beyond
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    ap = 0.0
    prev_recall = 0.0
    for k in range(len(scored)):
        if recall[k] > prev_recall:
            ap += (recall[k] - prev_recall) * envelope[k]
            prev_recall = recall[k]
    return float(ap)


def mean_average_precision(
    detections_by_image: Mapping[str, Sequence[Detection]],
    truths_by_image: Mapping[str, Sequence[GroundTruth]],
    iou_threshold: float = 0.5,
    iou_kind: str = "box",
    dims_by_image: Mapping[str, tuple[int, int]] | None = None,
) -> tuple[float, dict[str, float]]:
    """Mean AP over the classes that have at least one ground truth.

    Returns ``(map, per_class_ap)``. Raises when no class has any ground
    truth, since the mean would be over an empty set.
    """
    labels = sorted(
        {t.label for truths in truths_by_image.values() for t in truths}
    )
    if not labels:
        raise ContractError("mAP undefined: no ground truth instances in any class")
    per_class = {
        label: average_precision(
            detections_by_image,
            truths_by_image,
            label,
            iou_threshold=iou_threshold,
            iou_kind=iou_kind,
            dims_by_image=dims_by_image,
        )
        for label in labels
    }
    return float(np.mean(list(per_class.values()))), per_class


def image_level_verdict(
    detections: Sequence[Detection], score_threshold: float = 0.5
) -> str:
    """Diseased when any diseased detection scores at or above the threshold."""
    if not (0.0 <= score_threshold <= 1.0):
        raise ContractError(f"score_threshold must be in [0, 1], got {score_threshold}")
    for det in detections:
        if det.label == POSITIVE_LABEL and det.score >= score_threshold:
            return POSITIVE_LABEL
    return NEGATIVE_LABEL


def damage_extent(detections: Sequence[Detection], dims: tuple[int, int]) -> float:
    """Fraction of the image covered by the union of diseased masks.

    ``dims`` is ``(width, height)``. Overlapping masks count once, which is
    what makes the value monotone under adding detections and capped at 1.
    """
    width, height = int(dims[0]), int(dims[1])
    if width <= 0 or height <= 0:
        raise ContractError(f"dims must be positive, got {dims}")
    union = np.zeros((height, width), dtype=bool)
    for det in detections:
        if det.label != POSITIVE_LABEL:
            continue
        union |= det.full_mask((width, height))
    return float(union.sum()) / float(width * height)
