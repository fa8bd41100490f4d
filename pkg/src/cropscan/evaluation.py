"""Dataset-level evaluation: predictions file format and report assembly."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

from . import geometry, metrics
from .errors import DanglingReferenceError, ParseError
from .ingest import DatasetManifest
from .metrics import ConfusionCounts, Detection, GroundTruth

PREDICTIONS_SCHEMA_VERSION = "1"


def predictions_to_dict(
    predictions: Mapping[str, Sequence[Detection]],
    dims_by_image: Mapping[str, tuple[int, int]],
    *,
    model_run_id: str | None = None,
    score_floor: float | None = None,
) -> dict:
    """Serialize detections; full masks are stored as RLE documents."""
    serialized = {}
    for image_id, dets in predictions.items():
        rows = []
        for det in dets:
            row = {"label": det.label, "score": det.score, "bbox": list(det.bbox)}
            if det.mask is not None:
                if isinstance(det.mask, dict):
                    row["mask_rle"] = det.mask
                else:
                    row["mask_rle"] = geometry.encode_rle(
                        det.full_mask(dims_by_image[image_id])
                    )
            rows.append(row)
        serialized[image_id] = rows
    return {
        "schema_version": PREDICTIONS_SCHEMA_VERSION,
        "model_run_id": model_run_id,
        "score_floor": score_floor,
        "predictions": serialized,
    }


def predictions_from_dict(doc: dict) -> dict[str, list[Detection]]:
    if not isinstance(doc, dict):
        raise ParseError(f"predictions root must be an object, got {type(doc).__name__}")
    if doc.get("schema_version") != PREDICTIONS_SCHEMA_VERSION:
        raise ParseError(
            f"predictions: unsupported schema_version {doc.get('schema_version')!r}"
        )
    raw = doc.get("predictions")
    if not isinstance(raw, dict):
        raise ParseError("predictions: missing required field 'predictions'")
    out: dict[str, list[Detection]] = {}
    for image_id, rows in raw.items():
        dets = []
        for row in rows:
            try:
                dets.append(
                    Detection(
                        label=row["label"],
                        score=float(row["score"]),
                        bbox=tuple(float(v) for v in row["bbox"]),
                        mask=row.get("mask_rle"),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise ParseError(f"predictions[{image_id!r}]: malformed detection: {exc}") from exc
        out[image_id] = dets
    return out


def save_predictions(doc: dict, path: Path | str) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True))


def load_predictions(path: Path | str) -> dict[str, list[Detection]]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"predictions file is not valid JSON: {exc}") from exc
    return predictions_from_dict(doc)


def ground_truths_for(
    manifest: DatasetManifest, image_id: str, *, with_masks: bool = False
) -> list[GroundTruth]:
    record = manifest.record(image_id)
    truths = []
    for ann in manifest.annotations_for(image_id):
        mask = None
        if with_masks:
            mask = geometry.polygon_mask(ann.points, (record.width, record.height))
        truths.append(GroundTruth(label=ann.label, bbox=ann.bbox, mask=mask))
    return truths


def evaluate_predictions(
    manifest: DatasetManifest,
    predictions: Mapping[str, Sequence[Detection]],
    *,
    score_threshold: float = 0.5,
    iou_threshold: float = 0.5,
    mask_map: bool | None = None,
) -> dict:
    """Score predictions against a manifest.

    Classification metrics treat diseased as the positive class and come
    from per-image verdicts. Box mAP is always computed when any ground
    truth polygons exist; mask mAP is added when the predictions carry
    masks (or when forced via ``mask_map``). Manifest images absent from
    the predictions mapping count as zero detections.

    At full photo resolution the mask mAP path holds one decoded mask per
    instance in memory; fine for the dataset sizes this package targets.
    """
    known = {r.image_id for r in manifest.records}
    unknown = sorted(set(predictions) - known)
    if unknown:
        raise DanglingReferenceError(
            f"predictions reference images missing from the manifest: {unknown[:5]}"
        )

    eval_records = [r for r in manifest.records if r.split == "test"]
    if not eval_records:
        eval_records = list(manifest.records)

    counts = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    per_image = []
    dets_by_image: dict[str, list[Detection]] = {}
    dims_by_image: dict[str, tuple[int, int]] = {}
    any_masks = False
    for record in eval_records:
        dets = list(predictions.get(record.image_id, ()))
        dets_by_image[record.image_id] = dets
        dims_by_image[record.image_id] = (record.width, record.height)
        any_masks = any_masks or any(d.mask is not None for d in dets)

        verdict = metrics.image_level_verdict(dets, score_threshold)
        truth = record.image_label
        if truth == "diseased" and verdict == "diseased":
            counts["tp"] += 1
        elif truth == "diseased":
            counts["fn"] += 1
        elif verdict == "diseased":
            counts["fp"] += 1
        else:
            counts["tn"] += 1

        # box-only predictions cannot support an area claim, hence None;
        # an empty detection list can (the union is empty), hence 0.0
        extent = None
        if all(d.mask is not None for d in dets if d.label == "diseased"):
            extent = metrics.damage_extent(dets, (record.width, record.height))
        per_image.append(
            {
                "image_id": record.image_id,
                "truth": truth,
                "verdict": verdict,
                "n_detections": len(dets),
                "damage_extent": extent,
            }
        )

    report = metrics.classification_metrics(ConfusionCounts(**counts))
    out = {
        "n_images": len(eval_records),
        "score_threshold": score_threshold,
        "iou_threshold": iou_threshold,
        "counts": counts,
        "accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "degenerate": report.degenerate,
        "per_image": per_image,
    }

    eval_ids = set(dets_by_image)
    truth_boxes = {
        image_id: ground_truths_for(manifest, image_id) for image_id in eval_ids
    }
    if any(truth_boxes.values()):
        map_50, per_class = metrics.mean_average_precision(
            dets_by_image, truth_boxes, iou_threshold=iou_threshold, iou_kind="box"
        )
        out["map_50"] = map_50
        out["per_class_ap"] = per_class
        if mask_map or (mask_map is None and any_masks):
            truth_masks = {
                image_id: ground_truths_for(manifest, image_id, with_masks=True)
                for image_id in eval_ids
            }
            mask_map_50, mask_per_class = metrics.mean_average_precision(
                dets_by_image,
                truth_masks,
                iou_threshold=iou_threshold,
                iou_kind="mask",
                dims_by_image=dims_by_image,
            )
            out["map_50_mask"] = mask_map_50
            out["per_class_ap_mask"] = mask_per_class
    return out
