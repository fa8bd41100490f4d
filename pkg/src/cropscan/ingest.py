"""Dataset ingest: LabelMe annotation parsing, manifest assembly, splitting.

A dataset on disk looks like::

    root/
      images/        photos that have annotation documents
      annotations/   one LabelMe JSON per annotated image, same basename
      healthy/       optional, unannotated photos labeled by directory
      diseased/      optional, unannotated photos labeled by directory

Image ids are file stems. The manifest is a plain JSON document so other
tools can consume it without this package.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from PIL import Image

from .errors import (
    ConfigurationError,
    ContractError,
    DanglingReferenceError,
    DegenerateShapeError,
    DuplicateImageError,
    LabelError,
    ParseError,
)

ACCEPTED_LABELS = ("healthy", "diseased")
CAPTURE_PHASES = ("phase1_august", "phase2_september")
SPLITS = ("train", "test", "unassigned")
IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")

MANIFEST_SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class PolygonAnnotation:
    """One labeled region, stored as a closed polygon in image pixel space."""

    annotation_id: str
    parent_image_id: str
    label: str
    points: tuple[tuple[float, float], ...]
    bbox: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if self.label not in ACCEPTED_LABELS:
            raise LabelError(
                f"label {self.label!r} not in accepted labels {list(ACCEPTED_LABELS)}"
            )
        if len(self.points) < 3:
            raise DegenerateShapeError(
                f"annotation {self.annotation_id}: polygon has {len(self.points)} points"
            )
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise DegenerateShapeError(
                f"annotation {self.annotation_id}: degenerate bbox {self.bbox}"
            )


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    file_path: str
    width: int
    height: int
    image_label: str
    capture_phase: str | None = None
    split: str = "unassigned"

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ContractError(
                f"image {self.image_id}: dims must be positive, got {self.width}x{self.height}"
            )
        if self.image_label not in ACCEPTED_LABELS:
            raise LabelError(
                f"image {self.image_id}: label {self.image_label!r} "
                f"not in {list(ACCEPTED_LABELS)}"
            )
        if self.capture_phase is not None and self.capture_phase not in CAPTURE_PHASES:
            raise ParseError(
                f"image {self.image_id}: capture_phase {self.capture_phase!r} "
                f"not in {list(CAPTURE_PHASES)}"
            )
        if self.split not in SPLITS:
            raise ParseError(f"image {self.image_id}: split {self.split!r} not in {list(SPLITS)}")


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ImageRecord, ...] = ()
    annotations: tuple[PolygonAnnotation, ...] = ()
    split_seed: int | None = None
    train_fraction: float | None = None

    def record(self, image_id: str) -> ImageRecord:
        for rec in self.records:
            if rec.image_id == image_id:
                return rec
        raise KeyError(image_id)

    def annotations_for(self, image_id: str) -> tuple[PolygonAnnotation, ...]:
        return tuple(a for a in self.annotations if a.parent_image_id == image_id)

    def split_records(self, split: str) -> tuple[ImageRecord, ...]:
        return tuple(r for r in self.records if r.split == split)


def _clamp_points(
    raw: list[tuple[float, float]], width: int, height: int
) -> tuple[tuple[float, float], ...]:
    return tuple(
        (min(max(x, 0.0), float(width)), min(max(y, 0.0), float(height))) for x, y in raw
    )


def _bbox_of(points: Iterable[tuple[float, float]]) -> tuple[float, float, float, float]:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return (min(xs), min(ys), max(xs), max(ys))


def _require(doc: dict, key: str, kind: type, where: str) -> Any:
    if key not in doc:
        raise ParseError(f"{where}: missing required field {key!r}")
    value = doc[key]
    if kind is int and isinstance(value, bool):
        raise ParseError(f"{where}: field {key!r} must be {kind.__name__}, got bool")
    if not isinstance(value, kind):
        raise ParseError(
            f"{where}: field {key!r} must be {kind.__name__}, got {type(value).__name__}"
        )
    return value


def parse_labelme(document: bytes | str, image_dims: tuple[int, int]) -> list[PolygonAnnotation]:
    """Parse one LabelMe JSON document into polygon annotations.

    ``image_dims`` is ``(width, height)`` of the parent image and wins over
    whatever the document claims; points are clamped into those bounds.
    Rectangles arrive as 2 corner points and are expanded to 4-point
    polygons. Labels are case-insensitive and whitespace-tolerant.
    """
    width, height = int(image_dims[0]), int(image_dims[1])
    if width <= 0 or height <= 0:
        raise ContractError(f"image_dims must be positive, got {image_dims}")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"document root must be an object, got {type(doc).__name__}")

    _require(doc, "version", str, "document")
    image_path = _require(doc, "imagePath", str, "document")
    _require(doc, "imageHeight", int, "document")
    _require(doc, "imageWidth", int, "document")
    shapes = _require(doc, "shapes", list, "document")

    parent_image_id = Path(image_path).stem
    if not parent_image_id:
        raise ParseError("document: field 'imagePath' has an empty basename")

    annotations: list[PolygonAnnotation] = []
    for index, shape in enumerate(shapes):
        where = f"shapes[{index}]"
        if not isinstance(shape, dict):
            raise ParseError(f"{where}: must be an object, got {type(shape).__name__}")
        raw_label = _require(shape, "label", str, where)
        label = raw_label.strip().casefold()
        if label not in ACCEPTED_LABELS:
            raise LabelError(
                f"{where}: label {raw_label!r} not recognized; "
                f"accepted labels are {list(ACCEPTED_LABELS)}"
            )
        shape_type = _require(shape, "shape_type", str, where)
        raw_points = _require(shape, "points", list, where)
        points: list[tuple[float, float]] = []
        for p_index, pt in enumerate(raw_points):
            if (
                not isinstance(pt, (list, tuple))
                or len(pt) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pt)
            ):
                raise ParseError(f"{where}: field 'points'[{p_index}] must be an [x, y] pair")
            points.append((float(pt[0]), float(pt[1])))

        if shape_type == "rectangle":
            if len(points) != 2:
                raise ParseError(
                    f"{where}: rectangle must have exactly 2 corner points, got {len(points)}"
                )
            (x0, y0), (x1, y1) = points
            points = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        elif shape_type == "polygon":
            pass
        else:
            raise ParseError(
                f"{where}: field 'shape_type' must be 'polygon' or 'rectangle', "
                f"got {shape_type!r}"
            )

        clamped = _clamp_points(points, width, height)
        distinct = list(dict.fromkeys(clamped))
        if len(distinct) < 3:
            raise DegenerateShapeError(
                f"{where}: only {len(distinct)} distinct points after deduplication"
            )
        bbox = _bbox_of(clamped)
        if not (bbox[0] < bbox[2] and bbox[1] < bbox[3]):
            raise DegenerateShapeError(f"{where}: zero-area bounding box {bbox}")
        annotations.append(
            PolygonAnnotation(
                annotation_id=f"{parent_image_id}:{index}",
                parent_image_id=parent_image_id,
                label=label,
                points=clamped,
                bbox=bbox,
            )
        )
    return annotations


def _image_dims(path: Path) -> tuple[int, int]:
    with Image.open(path) as img:
        return img.size  # (width, height)


def build_manifest(root: Path | str) -> DatasetManifest:
    """Walk a dataset root and assemble a manifest.

    Image-level labels come from annotations when an annotation document
    exists (diseased iff at least one diseased polygon), otherwise from the
    ``healthy``/``diseased`` directory the file sits in. Files directly
    under ``images/`` with no annotation document default to healthy.
    """
    root = Path(root)
    if not root.exists():
        raise FileNotFoundError(f"dataset root does not exist: {root}")

    sources: list[tuple[Path, str | None]] = []
    for subdir, dir_label in (("images", None), ("healthy", "healthy"), ("diseased", "diseased")):
        base = root / subdir
        if not base.is_dir():
            continue
        for path in sorted(base.iterdir()):
            if path.suffix.lower() in IMAGE_SUFFIXES and path.is_file():
                sources.append((path, dir_label))

    by_id: dict[str, tuple[Path, str | None]] = {}
    for path, dir_label in sources:
        image_id = path.stem
        if image_id in by_id:
            raise DuplicateImageError(
                f"image id {image_id!r} appears twice: "
                f"{by_id[image_id][0]} and {path}"
            )
        by_id[image_id] = (path, dir_label)

    annotations: list[PolygonAnnotation] = []
    annotated_ids: set[str] = set()
    ann_dir = root / "annotations"
    if ann_dir.is_dir():
        for doc_path in sorted(ann_dir.glob("*.json")):
            image_id = doc_path.stem
            if image_id not in by_id:
                raise DanglingReferenceError(
                    f"annotation document {doc_path} references missing image {image_id!r}"
                )
            dims = _image_dims(by_id[image_id][0])
            parsed = parse_labelme(doc_path.read_bytes(), dims)
            # trust the directory layout over the document's imagePath field
            annotations.extend(dataclasses.replace(a, parent_image_id=image_id) for a in parsed)
            annotated_ids.add(image_id)

    diseased_ids = {a.parent_image_id for a in annotations if a.label == "diseased"}
    records: list[ImageRecord] = []
    for image_id in sorted(by_id):
        path, dir_label = by_id[image_id]
        if image_id in annotated_ids:
            label = "diseased" if image_id in diseased_ids else "healthy"
        else:
            label = dir_label or "healthy"
        width, height = _image_dims(path)
        records.append(
            ImageRecord(
                image_id=image_id,
                file_path=str(path.relative_to(root)),
                width=width,
                height=height,
                image_label=label,
            )
        )
    return DatasetManifest(records=tuple(records), annotations=tuple(annotations))


def split_dataset(
    manifest: DatasetManifest, seed: int, train_fraction: float
) -> DatasetManifest:
    """Assign every record to train or test, stratified by image label.

    Pure function of the sorted image ids, the seed, and the fraction: the
    same inputs always produce the same assignment, independent of record
    order or prior split state. Per class, ``round(train_fraction * n)``
    records go to train (half rounds up).
    """
    if not (0.0 < train_fraction < 1.0):
        raise ConfigurationError(
            f"train_fraction must be in the open interval (0, 1), got {train_fraction}"
        )
    if not manifest.records:
        raise ConfigurationError("cannot split an empty manifest")

    assignment: dict[str, str] = {}
    for label in ACCEPTED_LABELS:
        ids = sorted(r.image_id for r in manifest.records if r.image_label == label)
        if not ids:
            continue
        rng = random.Random(f"{seed}:{label}")
        rng.shuffle(ids)
        # round half up so a 5-image class at 0.5 gives 3 train, not banker's 2
        n_train = int(math.floor(train_fraction * len(ids) + 0.5))
        for image_id in ids[:n_train]:
            assignment[image_id] = "train"
        for image_id in ids[n_train:]:
            assignment[image_id] = "test"

    records = tuple(
        dataclasses.replace(rec, split=assignment[rec.image_id]) for rec in manifest.records
    )
    return dataclasses.replace(
        manifest, records=records, split_seed=seed, train_fraction=train_fraction
    )


def split_fingerprint(manifest: DatasetManifest) -> str:
    """Digest of the split assignment, for run provenance."""
    payload = json.dumps(
        {
            "seed": manifest.split_seed,
            "fraction": manifest.train_fraction,
            "train": sorted(r.image_id for r in manifest.records if r.split == "train"),
            "test": sorted(r.image_id for r in manifest.records if r.split == "test"),
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def manifest_to_dict(manifest: DatasetManifest) -> dict:
    return {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "split_seed": manifest.split_seed,
        "train_fraction": manifest.train_fraction,
        "records": [dataclasses.asdict(r) for r in manifest.records],
        "annotations": [
            {
                "annotation_id": a.annotation_id,
                "parent_image_id": a.parent_image_id,
                "label": a.label,
                "points": [list(p) for p in a.points],
                "bbox": list(a.bbox),
            }
            for a in manifest.annotations
        ],
    }


def manifest_from_dict(doc: dict) -> DatasetManifest:
    if not isinstance(doc, dict):
        raise ParseError(f"manifest root must be an object, got {type(doc).__name__}")
    version = doc.get("schema_version")
    if version != MANIFEST_SCHEMA_VERSION:
        raise ParseError(
            f"manifest: unsupported schema_version {version!r}, "
            f"expected {MANIFEST_SCHEMA_VERSION!r}"
        )
    known_ids = set()
    records = []
    for raw in doc.get("records", []):
        rec = ImageRecord(
            image_id=_require(raw, "image_id", str, "record"),
            file_path=_require(raw, "file_path", str, "record"),
            width=_require(raw, "width", int, "record"),
            height=_require(raw, "height", int, "record"),
            image_label=_require(raw, "image_label", str, "record"),
            capture_phase=raw.get("capture_phase"),
            split=raw.get("split", "unassigned"),
        )
        if rec.image_id in known_ids:
            raise DuplicateImageError(f"manifest: duplicate image id {rec.image_id!r}")
        known_ids.add(rec.image_id)
        records.append(rec)
    annotations = []
    for raw in doc.get("annotations", []):
        parent = _require(raw, "parent_image_id", str, "annotation")
        if parent not in known_ids:
            raise DanglingReferenceError(
                f"annotation {raw.get('annotation_id')!r} references missing image {parent!r}"
            )
        annotations.append(
            PolygonAnnotation(
                annotation_id=_require(raw, "annotation_id", str, "annotation"),
                parent_image_id=parent,
                label=_require(raw, "label", str, "annotation"),
                points=tuple((float(p[0]), float(p[1])) for p in raw["points"]),
                bbox=tuple(float(v) for v in raw["bbox"]),
            )
        )
    return DatasetManifest(
        records=tuple(records),
        annotations=tuple(annotations),
        split_seed=doc.get("split_seed"),
        train_fraction=doc.get("train_fraction"),
    )


def save_manifest(manifest: DatasetManifest, path: Path | str) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(manifest), indent=2, sort_keys=True))


def load_manifest(path: Path | str) -> DatasetManifest:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest is not valid JSON: {exc}") from exc
    return manifest_from_dict(doc)
