"""Crop disease detection from leaf photos.

The pipeline: ingest LabelMe-annotated field photos into a manifest, split
deterministically, train either a baseline binary classifier or a Mask
R-CNN instance segmenter, evaluate with detection metrics, and serve
reports over HTTP with severity estimates and overlays.
"""

from . import evaluation, geometry, images, ingest, metrics, synth
from .errors import (
    CheckpointError,
    ConfigurationError,
    ContractError,
    CropscanError,
    DanglingReferenceError,
    DegenerateShapeError,
    DimensionError,
    DuplicateImageError,
    LabelError,
    ParseError,
)

__version__ = "0.1.0"

__all__ = [
    "evaluation",
    "geometry",
    "images",
    "ingest",
    "metrics",
    "synth",
    "CheckpointError",
    "ConfigurationError",
    "ContractError",
    "CropscanError",
    "DanglingReferenceError",
    "DegenerateShapeError",
    "DimensionError",
    "DuplicateImageError",
    "LabelError",
    "ParseError",
    "__version__",
]
