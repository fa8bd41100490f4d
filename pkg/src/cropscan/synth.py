"""Synthetic fixture data: green leaf textures with brown lesion regions.

The generator writes a dataset layout that ingest can walk directly
(``images/`` plus ``annotations/`` with one LabelMe document per image).
Output is byte-identical for a fixed seed. If a draw happens to produce
only one class, the whole dataset is regenerated with the next seed and the
summary records which seed was actually used.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

from . import geometry

PRESETS = {
    "ellipse": {
        "leaf_rgb": (60, 130, 50),
        "leaf_noise": 10.0,
        "lesion_rgb": (101, 67, 33),
        "lesion_noise": 8.0,
        "lesion_count": (1, 3),
        "radius": (18, 45),
        "vertices": 16,
    },
    # axis-aligned rectangle lesions; their masks fill the whole bbox, which
    # makes them the reference shape for mask round-trip checks
    "rectangle": {
        "leaf_rgb": (60, 130, 50),
        "leaf_noise": 10.0,
        "lesion_rgb": (101, 67, 33),
        "lesion_noise": 8.0,
        "lesion_count": (1, 3),
        "radius": (12, 30),  # half-extent per axis
        "vertices": 4,
    },
}


def _lesion_polygon(rng: np.random.Generator, size: int, preset: dict) -> list[list[float]]:
    r_lo, r_hi = preset["radius"]
    margin = r_hi + 5
    cx = float(rng.uniform(margin, size - margin))
    cy = float(rng.uniform(margin, size - margin))
    rx = float(rng.uniform(r_lo, r_hi))
    ry = float(rng.uniform(r_lo, r_hi))
    if preset["vertices"] == 4:
        points = [
            [cx - rx, cy - ry],
            [cx + rx, cy - ry],
            [cx + rx, cy + ry],
            [cx - rx, cy + ry],
        ]
    else:
        theta = float(rng.uniform(0.0, math.pi))
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        points = []
        for k in range(preset["vertices"]):
            angle = 2.0 * math.pi * k / preset["vertices"]
            ex = rx * math.cos(angle)
            ey = ry * math.sin(angle)
            points.append([cx + ex * cos_t - ey * sin_t, cy + ex * sin_t + ey * cos_t])
    return [[round(min(max(x, 0.0), float(size)), 2), round(min(max(y, 0.0), float(size)), 2)] for x, y in points]


def _render_image(
    rng: np.random.Generator, size: int, polygons: list[list[list[float]]], preset: dict
) -> np.ndarray:
    base = np.array(preset["leaf_rgb"], dtype=np.float64)
    image = base[None, None, :] + rng.normal(0.0, preset["leaf_noise"], (size, size, 3))
    lesion = np.array(preset["lesion_rgb"], dtype=np.float64)
    for points in polygons:
        mask = geometry.polygon_mask(points, (size, size))
        noise = rng.normal(0.0, preset["lesion_noise"], (size, size, 3))
        image[mask] = lesion[None, :] + noise[mask]
    return np.clip(image, 0, 255).astype(np.uint8)


def _labelme_doc(image_id: str, size: int, polygons: list[list[list[float]]]) -> dict:
    return {
        "version": "5.3.1",
        "flags": {},
        "shapes": [
            {
                "label": "diseased",
                "points": points,
                "group_id": None,
                "shape_type": "polygon",
                "flags": {},
            }
            for points in polygons
        ],
        "imagePath": f"../images/{image_id}.png",
        "imageData": None,
        "imageHeight": size,
        "imageWidth": size,
    }


def generate_dataset(
    out_dir: Path | str,
    count: int = 20,
    seed: int = 0,
    *,
    image_size: int = 256,
    lesion_probability: float = 0.5,
    preset: str = "ellipse",
) -> dict:
    """Write ``count`` synthetic images plus LabelMe annotations.

    Returns a summary dict with per-class counts and the seed that was
    actually used (it advances past the requested one when a draw comes out
    single-class, which the summary makes visible).
    """
    if count < 2:
        raise ValueError(f"count must be >= 2 so both classes can appear, got {count}")
    if preset not in PRESETS:
        raise ValueError(f"preset must be one of {sorted(PRESETS)}, got {preset!r}")
    if not (0.0 < lesion_probability < 1.0):
        raise ValueError(f"lesion_probability must be in (0, 1), got {lesion_probability}")
    params = PRESETS[preset]
    out_dir = Path(out_dir)

    used_seed = seed
    while True:
        rng = np.random.default_rng(used_seed)
        plan: list[tuple[str, list[list[list[float]]]]] = []
        for index in range(count):
            image_id = f"synth_{index:04d}"
            polygons: list[list[list[float]]] = []
            if rng.random() < lesion_probability:
                n_lesions = int(rng.integers(params["lesion_count"][0], params["lesion_count"][1] + 1))
                polygons = [_lesion_polygon(rng, image_size, params) for _ in range(n_lesions)]
            plan.append((image_id, polygons))
        n_diseased = sum(1 for _, polys in plan if polys)
        if 0 < n_diseased < count:
            break
        used_seed += 1

    images_dir = out_dir / "images"
    ann_dir = out_dir / "annotations"
    images_dir.mkdir(parents=True, exist_ok=True)
    ann_dir.mkdir(parents=True, exist_ok=True)

    render_rng = np.random.default_rng(used_seed + 10_000)
    for image_id, polygons in plan:
        image = _render_image(render_rng, image_size, polygons, params)
        Image.fromarray(image).save(images_dir / f"{image_id}.png")
        doc = _labelme_doc(image_id, image_size, polygons)
        (ann_dir / f"{image_id}.json").write_text(json.dumps(doc, indent=2))

    return {
        "out_dir": str(out_dir),
        "count": count,
        "diseased": n_diseased,
        "healthy": count - n_diseased,
        "seed_requested": seed,
        "seed_used": used_seed,
        "image_size": image_size,
        "preset": preset,
    }
