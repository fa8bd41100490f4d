"""Pixel-space geometry kernels.

Everything in here operates on plain numpy arrays and float boxes so the
rest of the package (ingest, metrics, training, the HTTP service) can share
one set of conventions:

* masks are 2-D bool arrays indexed ``[row, col]``, i.e. ``[y, x]``
* boxes are ``(x_min, y_min, x_max, y_max)`` floats with strict ordering
* a pixel ``(i, j)`` is covered by a polygon when its center
  ``(j + 0.5, i + 0.5)`` falls inside under the even-odd rule
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, DimensionError

Box = tuple[float, float, float, float]

DEFAULT_MINI_MASK_SIDE = 56


def validate_box(box: Sequence[float]) -> Box:
    """Check strict corner ordering and return the box as a float tuple."""
    if len(box) != 4:
        raise ContractError(f"box must have 4 coordinates, got {len(box)}")
    x0, y0, x1, y1 = (float(v) for v in box)
    if not (math.isfinite(x0) and math.isfinite(y0) and math.isfinite(x1) and math.isfinite(y1)):
        raise ContractError(f"box coordinates must be finite, got {box!r}")
    if not (x0 < x1 and y0 < y1):
        raise ContractError(
            f"box must satisfy x_min < x_max and y_min < y_max, got {(x0, y0, x1, y1)}"
        )
    return (x0, y0, x1, y1)


def polygon_mask(points: Sequence[Sequence[float]], dims: tuple[int, int]) -> np.ndarray:
    """Rasterize a polygon onto a ``(height, width)`` bool grid.

    ``dims`` is ``(width, height)``. A pixel is set when its center lies
    inside the polygon under the even-odd rule. Edges are handled with the
    half-open scanline convention ``min(y) <= center_y < max(y)`` so shared
    vertices and horizontal edges never double-count.
    """
    width, height = int(dims[0]), int(dims[1])
    if width <= 0 or height <= 0:
        raise DimensionError(f"dims must be positive, got {(width, height)}")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ContractError(f"polygon needs an (n, 2) array with n >= 3, got shape {pts.shape}")

    mask = np.zeros((height, width), dtype=bool)
    centers_x = np.arange(width, dtype=np.float64) + 0.5
    centers_y = np.arange(height, dtype=np.float64) + 0.5

    x0s = pts[:, 0]
    y0s = pts[:, 1]
    x1s = np.roll(x0s, -1)
    y1s = np.roll(y0s, -1)

    for ax, ay, bx, by in zip(x0s, y0s, x1s, y1s):
        if ay == by:
            continue  # horizontal edge, never crosses a scanline half-open
        lo, hi = (ay, by) if ay < by else (by, ay)
        rows = np.nonzero((centers_y >= lo) & (centers_y < hi))[0]
        if rows.size == 0:
            continue
        t = (centers_y[rows] - ay) / (by - ay)
        cross_x = ax + t * (bx - ax)
        # toggle every pixel whose center is left of the crossing
        mask[rows] ^= centers_x[None, :] < cross_x[:, None]
    return mask


def rasterize_polygon(
    points: Sequence[Sequence[float]], dims: tuple[int, int]
) -> np.ndarray:
    """Rasterize after checking the polygon actually fits inside ``dims``.

    ``dims`` is ``(width, height)``. Raises :class:`DimensionError` when the
    polygon's bounding box exceeds the target grid.
    """
    width, height = int(dims[0]), int(dims[1])
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ContractError(f"polygon needs an (n, 2) array with n >= 3, got shape {pts.shape}")
    if pts[:, 0].max() > width or pts[:, 1].max() > height or pts.min() < 0:
        raise DimensionError(
            f"polygon bbox [{pts[:, 0].min()}, {pts[:, 1].min()}, "
            f"{pts[:, 0].max()}, {pts[:, 1].max()}] exceeds dims {(width, height)}"
        )
    return polygon_mask(pts, (width, height))


def box_iou(a: Sequence[float], b: Sequence[float]) -> float:
    """Intersection over union of two boxes. Disjoint boxes give 0.0."""
    ax0, ay0, ax1, ay1 = validate_box(a)
    bx0, by0, bx1, by1 = validate_box(b)
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """IoU of two boolean masks of identical shape.

    Two empty masks are defined to have IoU 1.0 (they agree everywhere).
    """
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ContractError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    inter = np.logical_and(a, b).sum()
    return float(inter) / float(union)


def resize_mask_nearest(mask: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resize of a bool mask to ``(height, width)``.

    Nearest is deliberate: bilinear would produce fractional values and
    masks must stay binary end to end.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ContractError(f"mask must be 2-D, got shape {mask.shape}")
    out_h, out_w = int(out_shape[0]), int(out_shape[1])
    if out_h <= 0 or out_w <= 0:
        raise DimensionError(f"target shape must be positive, got {(out_h, out_w)}")
    in_h, in_w = mask.shape
    rows = np.minimum(((np.arange(out_h) + 0.5) * in_h / out_h).astype(np.int64), in_h - 1)
    cols = np.minimum(((np.arange(out_w) + 0.5) * in_w / out_w).astype(np.int64), in_w - 1)
    return mask[rows[:, None], cols[None, :]]


def _pixel_window(box: Box, dims: tuple[int, int]) -> tuple[int, int, int, int]:
    """Integer pixel window covering a float box, clamped to ``(width, height)``."""
    width, height = int(dims[0]), int(dims[1])
    x0 = max(0, math.floor(box[0]))
    y0 = max(0, math.floor(box[1]))
    x1 = min(width, math.ceil(box[2]))
    y1 = min(height, math.ceil(box[3]))
    if x1 <= x0 or y1 <= y0:
        raise DimensionError(f"box {box} has no pixel coverage inside dims {(width, height)}")
    return x0, y0, x1, y1


@dataclass(frozen=True)
class MiniMask:
    """A mask stored as a fixed-size crop registered to its bounding box."""

    data: np.ndarray
    box: Box

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=bool)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ContractError(f"mini mask data must be square, got shape {data.shape}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "box", validate_box(self.box))

    @property
    def side(self) -> int:
        return int(self.data.shape[0])


def encode_mini_mask(
    mask: np.ndarray, box: Sequence[float], side: int = DEFAULT_MINI_MASK_SIDE
) -> MiniMask:
    """Crop ``mask`` to ``box`` and resize the crop to ``side x side``."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ContractError(f"mask must be 2-D, got shape {mask.shape}")
    if side <= 0:
        raise ContractError(f"mini mask side must be positive, got {side}")
    vbox = validate_box(box)
    h, w = mask.shape
    x0, y0, x1, y1 = _pixel_window(vbox, (w, h))
    crop = mask[y0:y1, x0:x1]
    return MiniMask(data=resize_mask_nearest(crop, (side, side)), box=vbox)


def decode_mini_mask(mini: MiniMask, dims: tuple[int, int]) -> np.ndarray:
    """Expand a mini mask back to a full ``(height, width)`` frame.

    ``dims`` is ``(width, height)``. Inverse of :func:`encode_mini_mask`
    up to the resampling loss; exact when the box window fits within the
    mini-mask side.
    """
    width, height = int(dims[0]), int(dims[1])
    x0, y0, x1, y1 = _pixel_window(mini.box, (width, height))
    full = np.zeros((height, width), dtype=bool)
    full[y0:y1, x0:x1] = resize_mask_nearest(mini.data, (y1 - y0, x1 - x0))
    return full


def encode_rle(mask: np.ndarray) -> dict:
    """Run-length encode a bool mask.

    Runs walk the mask in column-major order and the first run always
    counts zeros, so an encoding never needs a value stream. The returned
    document is JSON-ready.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ContractError(f"mask must be 2-D, got shape {mask.shape}")
    h, w = mask.shape
    flat = mask.flatten(order="F")
    counts: list[int] = []
    if flat.size == 0:
        counts = [0]
    else:
        changes = np.nonzero(np.diff(flat))[0]
        boundaries = np.concatenate(([0], changes + 1, [flat.size]))
        runs = np.diff(boundaries)
        counts = [int(r) for r in runs]
        if flat[0]:
            counts.insert(0, 0)
    return {"size": [h, w], "counts": counts, "order": "column-major"}


def decode_rle(doc: dict) -> np.ndarray:
    """Decode a document produced by :func:`encode_rle`."""
    try:
        h, w = int(doc["size"][0]), int(doc["size"][1])
        counts = [int(c) for c in doc["counts"]]
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ContractError(f"malformed RLE document: {exc}") from exc
    if any(c < 0 for c in counts):
        raise ContractError("RLE counts must be non-negative")
    total = sum(counts)
    if total != h * w:
        raise ContractError(f"RLE counts sum to {total}, expected {h * w}")
    values = np.zeros(len(counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, counts)
    return flat.reshape((h, w), order="F")


def blur_score(image: np.ndarray) -> float:
    """Sharpness score: variance of the 3x3 discrete Laplacian.

    Accepts a 2-D grayscale array or an RGB array (converted with ITU-R 601
    luma weights). The Laplacian kernel is [[0,1,0],[1,-4,1],[0,1,0]] and
    only the valid interior contributes, so the score is invariant under
    adding a constant and is exactly 0 for a constant image. Higher means
    sharper.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 3:
        img = img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114
    if img.ndim != 2:
        raise ContractError(f"expected 2-D grayscale or RGB image, got shape {image.shape}")
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ContractError(f"image too small for a 3x3 kernel: {img.shape}")
    lap = (
        img[:-2, 1:-1]
        + img[2:, 1:-1]
        + img[1:-1, :-2]
        + img[1:-1, 2:]
        - 4.0 * img[1:-1, 1:-1]
    )
    return float(lap.var())


@dataclass(frozen=True)
class LetterboxTransform:
    """Forward map from source pixel space into a letterboxed target frame.

    ``scale`` is applied first, then the ``(pad_x, pad_y)`` offset. The
    inverse clamps back into the source bounds so downstream boxes always
    stay inside the original image.
    """

    scale: float
    pad_x: int
    pad_y: int
    src_size: tuple[int, int]
    dst_size: tuple[int, int]

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts * self.scale + np.array([self.pad_x, self.pad_y], dtype=np.float64)

    def apply_box(self, box: Sequence[float]) -> Box:
        x0, y0, x1, y1 = validate_box(box)
        return (
            x0 * self.scale + self.pad_x,
            y0 * self.scale + self.pad_y,
            x1 * self.scale + self.pad_x,
            y1 * self.scale + self.pad_y,
        )

    def invert_box(self, box: Sequence[float]) -> Box:
        x0, y0, x1, y1 = validate_box(box)
        w, h = self.src_size
        ix0 = min(max((x0 - self.pad_x) / self.scale, 0.0), float(w))
        iy0 = min(max((y0 - self.pad_y) / self.scale, 0.0), float(h))
        ix1 = min(max((x1 - self.pad_x) / self.scale, 0.0), float(w))
        iy1 = min(max((y1 - self.pad_y) / self.scale, 0.0), float(h))
        return (ix0, iy0, ix1, iy1)

    def invert_mask(self, mask: np.ndarray) -> np.ndarray:
        """Map a mask in the letterboxed frame back to source resolution."""
        mask = np.asarray(mask, dtype=bool)
        dst_w, dst_h = self.dst_size
        if mask.shape != (dst_h, dst_w):
            raise ContractError(
                f"mask shape {mask.shape} does not match letterbox frame {(dst_h, dst_w)}"
            )
        src_w, src_h = self.src_size
        content_w = max(1, round(src_w * self.scale))
        content_h = max(1, round(src_h * self.scale))
        content = mask[self.pad_y : self.pad_y + content_h, self.pad_x : self.pad_x + content_w]
        return resize_mask_nearest(content, (src_h, src_w))


def resize_letterbox(
    image: np.ndarray, target: tuple[int, int]
) -> tuple[np.ndarray, LetterboxTransform]:
    """Aspect-preserving resize onto a zero-padded ``(width, height)`` canvas.

    Returns the padded image and the forward transform. Resampling is
    nearest-neighbor index mapping for every dtype, which keeps masks binary
    and the whole path deterministic; the slight quality loss versus
    bilinear does not matter for the consumers in this package.
    """
    img = np.asarray(image)
    if img.ndim not in (2, 3):
        raise ContractError(f"image must be 2-D or 3-D, got shape {img.shape}")
    src_h, src_w = img.shape[0], img.shape[1]
    if src_h == 0 or src_w == 0:
        raise ContractError("image has a zero dimension")
    dst_w, dst_h = int(target[0]), int(target[1])
    if dst_w <= 0 or dst_h <= 0:
        raise DimensionError(f"target dims must be positive, got {(dst_w, dst_h)}")

    scale = min(dst_w / src_w, dst_h / src_h)
    content_w = max(1, round(src_w * scale))
    content_h = max(1, round(src_h * scale))
    pad_x = (dst_w - content_w) // 2
    pad_y = (dst_h - content_h) // 2

    rows = np.minimum(((np.arange(content_h) + 0.5) * src_h / content_h).astype(np.int64), src_h - 1)
    cols = np.minimum(((np.arange(content_w) + 0.5) * src_w / content_w).astype(np.int64), src_w - 1)
    content = img[rows[:, None], cols[None, :]]

    out_shape = (dst_h, dst_w) + img.shape[2:]
    out = np.zeros(out_shape, dtype=img.dtype)
    out[pad_y : pad_y + content_h, pad_x : pad_x + content_w] = content
    transform = LetterboxTransform(
        scale=scale, pad_x=pad_x, pad_y=pad_y, src_size=(src_w, src_h), dst_size=(dst_w, dst_h)
    )
    return out, transform
