"""Image file loading with EXIF orientation applied."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageOps

# EXIF orientation values that swap width and height
_TRANSPOSED_ORIENTATIONS = {5, 6, 7, 8}


def load_image_rgb(source) -> np.ndarray:
    """Load an image file or file object as an (H, W, 3) uint8 array.

    EXIF orientation is honored, so a photo shot in portrait comes back
    portrait regardless of how the sensor stored it.
    """
    with Image.open(source) as img:
        img = ImageOps.exif_transpose(img)
        return np.asarray(img.convert("RGB"))


def image_dims(path: Path | str) -> tuple[int, int]:
    """(width, height) as displayed, i.e. after EXIF orientation."""
    with Image.open(path) as img:
        width, height = img.size
        orientation = img.getexif().get(0x0112, 1)
    if orientation in _TRANSPOSED_ORIENTATIONS:
        return height, width
    return width, height


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma, matching the blur score's internal conversion."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        return img
    return img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114
