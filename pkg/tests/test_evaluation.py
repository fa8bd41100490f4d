import numpy as np
import pytest

from cropscan import evaluation, geometry, ingest
from cropscan.errors import DanglingReferenceError, ParseError
from cropscan.metrics import Detection


def manifest_with_annotations():
    records = (
        ingest.ImageRecord(
            image_id="sick", file_path="images/sick.png",
            width=40, height=40, image_label="diseased", split="test",
        ),
        ingest.ImageRecord(
            image_id="fine", file_path="images/fine.png",
            width=40, height=40, image_label="healthy", split="test",
        ),
    )
    annotations = (
        ingest.PolygonAnnotation(
            annotation_id="sick:0", parent_image_id="sick", label="diseased",
            points=((10.0, 10.0), (30.0, 10.0), (30.0, 30.0), (10.0, 30.0)),
            bbox=(10.0, 10.0, 30.0, 30.0),
        ),
    )
    return ingest.DatasetManifest(records=records, annotations=annotations)


def square_mask(size, y0, y1, x0, x1):
    mask = np.zeros((size, size), dtype=bool)
    mask[y0:y1, x0:x1] = True
    return mask


def test_perfect_predictions_score_perfectly():
    manifest = manifest_with_annotations()
    predictions = {
        "sick": [Detection(
            label="diseased", score=0.95, bbox=(10, 10, 30, 30),
            mask=square_mask(40, 10, 30, 10, 30),
        )],
        "fine": [],
    }
    report = evaluation.evaluate_predictions(manifest, predictions)
    assert report["counts"] == {"tp": 1, "fp": 0, "fn": 0, "tn": 1}
    assert report["f1"] == 1.0
    assert report["map_50"] == 1.0
    assert report["map_50_mask"] == 1.0
    extents = {row["image_id"]: row["damage_extent"] for row in report["per_image"]}
    assert extents["sick"] == pytest.approx(400 / 1600)


def test_missing_image_counts_as_no_detections():
    manifest = manifest_with_annotations()
    report = evaluation.evaluate_predictions(manifest, {})
    assert report["counts"] == {"tp": 0, "fp": 0, "fn": 1, "tn": 1}
    assert report["map_50"] == 0.0


def test_unknown_image_in_predictions_rejected():
    manifest = manifest_with_annotations()
    dets = {"stranger": []}
    with pytest.raises(DanglingReferenceError):
        evaluation.evaluate_predictions(manifest, dets)


def test_threshold_moves_verdicts():
    manifest = manifest_with_annotations()
    predictions = {
        "sick": [Detection(label="diseased", score=0.4, bbox=(10, 10, 30, 30))],
        "fine": [],
    }
    low = evaluation.evaluate_predictions(manifest, predictions, score_threshold=0.3)
    high = evaluation.evaluate_predictions(manifest, predictions, score_threshold=0.9)
    assert low["counts"]["tp"] == 1
    assert high["counts"]["fn"] == 1


def test_predictions_file_round_trip(tmp_path):
    mask = square_mask(40, 0, 10, 0, 10)
    predictions = {
        "sick": [Detection(label="diseased", score=0.75, bbox=(0, 0, 10, 10), mask=mask)],
    }
    doc = evaluation.predictions_to_dict(
        predictions, {"sick": (40, 40)}, model_run_id="run-x", score_floor=0.05
    )
    path = tmp_path / "preds.json"
    evaluation.save_predictions(doc, path)
    loaded = evaluation.load_predictions(path)
    assert set(loaded) == {"sick"}
    det = loaded["sick"][0]
    assert det.label == "diseased"
    assert det.score == 0.75
    assert (det.full_mask((40, 40)) == mask).all()


def test_predictions_reject_unknown_schema(tmp_path):
    path = tmp_path / "preds.json"
    path.write_text('{"schema_version": "7", "predictions": {}}')
    with pytest.raises(ParseError):
        evaluation.load_predictions(path)


def test_ground_truths_rasterize_on_demand():
    manifest = manifest_with_annotations()
    plain = evaluation.ground_truths_for(manifest, "sick")
    with_masks = evaluation.ground_truths_for(manifest, "sick", with_masks=True)
    assert plain[0].mask is None
    assert with_masks[0].mask is not None
    assert with_masks[0].mask.sum() == 400
    assert geometry.mask_iou(
        with_masks[0].mask, square_mask(40, 10, 30, 10, 30)
    ) == 1.0


def test_extent_is_zero_without_detections_and_none_without_masks():
    manifest = manifest_with_annotations()
    box_only = {
        "sick": [Detection(label="diseased", score=0.9, bbox=(10, 10, 30, 30))],
        "fine": [],
    }
    report = evaluation.evaluate_predictions(manifest, box_only)
    extents = {row["image_id"]: row["damage_extent"] for row in report["per_image"]}
    assert extents["sick"] is None  # no mask, no area claim
    assert extents["fine"] == 0.0  # nothing detected, vacuously no damage
