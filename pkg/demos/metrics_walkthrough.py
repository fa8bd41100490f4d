#!/usr/bin/env python3
"""How detections get scored: matching, average precision, image verdicts."""

from cropscan.metrics import (
    Detection,
    GroundTruth,
    average_precision,
    damage_extent,
    f1_score,
    image_level_verdict,
    match_detections,
)

truths = [
    GroundTruth(label="diseased", bbox=(10, 10, 40, 40)),
    GroundTruth(label="diseased", bbox=(60, 60, 90, 90)),
    GroundTruth(label="healthy", bbox=(5, 60, 30, 95)),
]
detections = [
    Detection(label="diseased", score=0.92, bbox=(12, 11, 41, 42)),   # good hit
    Detection(label="diseased", score=0.85, bbox=(55, 58, 88, 92)),   # good hit
    Detection(label="diseased", score=0.40, bbox=(70, 5, 95, 25)),    # false alarm
    Detection(label="healthy", score=0.77, bbox=(6, 61, 29, 96)),     # good hit
]

result = match_detections(detections, truths, iou_threshold=0.5)
print("matched pairs (detection -> truth, IoU):")
for det_index, truth_index, iou in result.pairs:
    det = detections[det_index]
    print(f"  {det.label}@{det.score:.2f} -> truth {truth_index}  IoU {iou:.3f}")
print(f"unmatched detections: {list(result.unmatched_detections)}")
print(f"unmatched truths:     {list(result.unmatched_truths)}")

ap = average_precision({"img": detections}, {"img": truths}, label="diseased")
print(f"\nAP@0.5 for the diseased class: {ap:.4f}")

# image-level call: one confident diseased hit flips the verdict
print(f"\nverdict at threshold 0.5: {image_level_verdict(detections, 0.5)}")
print(f"verdict at threshold 0.95: {image_level_verdict(detections, 0.95)}")

# extent needs masks; boxes alone are not enough, so build two rectangles
import numpy as np

mask_a = np.zeros((100, 100), dtype=bool)
mask_a[10:40, 10:40] = True
mask_b = np.zeros((100, 100), dtype=bool)
mask_b[30:60, 30:60] = True  # overlaps mask_a; the union counts it once
with_masks = [
    Detection(label="diseased", score=0.9, bbox=(10, 10, 40, 40), mask=mask_a),
    Detection(label="diseased", score=0.8, bbox=(30, 30, 60, 60), mask=mask_b),
]
extent = damage_extent(with_masks, (100, 100))
print(f"\ndamage extent over 100x100: {extent:.4f} "
      f"({int(extent * 10000)} of 10000 pixels)")

# the composite score used in the summary tables
print(f"\nf1(precision=0.598, recall=0.662) = {f1_score(0.598, 0.662):.3f}")
