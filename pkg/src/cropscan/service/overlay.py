"""Render detections over a photo as a PNG.

Mask fills are alpha-blended in numpy first, then boxes and labels go on
top with PIL's drawing primitives, so the set of pixels touched by a mask
fill is exactly the decoded mask (minus whatever the box outline and text
later cover). Rendering is deterministic: same inputs, same PNG bytes.
"""

from __future__ import annotations

import io
from typing import Sequence

import numpy as np
from PIL import Image, ImageDraw

from ..metrics import Detection

COLORS = {"diseased": (214, 40, 40), "healthy": (58, 160, 80)}
FILL_ALPHA = 0.4
DASH_ON = 6
DASH_OFF = 4
LINE_WIDTH = 2


def _dashed_line(draw: ImageDraw.ImageDraw, start, end, color) -> None:
    x0, y0 = start
    x1, y1 = end
    length = max(abs(x1 - x0), abs(y1 - y0))
    if length == 0:
        return
    step_x = (x1 - x0) / length
    step_y = (y1 - y0) / length
    pos = 0.0
    while pos < length:
        seg_end = min(pos + DASH_ON, length)
        draw.line(
            [
                (x0 + step_x * pos, y0 + step_y * pos),
                (x0 + step_x * seg_end, y0 + step_y * seg_end),
            ],
            fill=color,
            width=LINE_WIDTH,
        )
        pos = seg_end + DASH_OFF


def render_overlay(image: np.ndarray, detections: Sequence[Detection]) -> bytes:
    """PNG bytes of the image with mask fills, dashed boxes, and labels.

    With no detections the output decodes pixel-identically to the input.
    """
    base = np.asarray(image, dtype=np.uint8)
    if base.ndim != 3 or base.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {base.shape}")
    height, width = base.shape[0], base.shape[1]

    canvas = base.astype(np.float64)
    for det in detections:
        if det.mask is None:
            continue
        mask = det.full_mask((width, height))
        color = np.array(COLORS[det.label], dtype=np.float64)
        canvas[mask] = (1.0 - FILL_ALPHA) * canvas[mask] + FILL_ALPHA * color[None, :]
    rendered = Image.fromarray(np.clip(np.round(canvas), 0, 255).astype(np.uint8))

    draw = ImageDraw.Draw(rendered)
    for det in detections:
        color = COLORS[det.label]
        x0, y0, x1, y1 = det.bbox
        _dashed_line(draw, (x0, y0), (x1, y0), color)
        _dashed_line(draw, (x1, y0), (x1, y1), color)
        _dashed_line(draw, (x1, y1), (x0, y1), color)
        _dashed_line(draw, (x0, y1), (x0, y0), color)
    for det in detections:
        x0, y0 = det.bbox[0], det.bbox[1]
        text = f"{det.label} {det.score:.2f}"
        draw.text((x0 + 4, y0 + 4), text, fill=(0, 0, 0))
        draw.text((x0 + 3, y0 + 3), text, fill=(255, 255, 255))

    buffer = io.BytesIO()
    rendered.save(buffer, format="PNG")
    return buffer.getvalue()
