/**
 * Pure pixel compositing for the overlay viewer.
 *
 * Works on raw RGBA buffers instead of a canvas context, which keeps it
 * unit-testable in node and makes re-renders trivially stateless: every
 * call starts from the untouched base image, so toggling a layer off and
 * back on reproduces the previous frame byte for byte.
 */

import { decodeRle } from "./rle.js";
import { DetectionPayload, filterDetections } from "./report.js";

export interface LayerToggles {
  masks: boolean;
  boxes: boolean;
}

export const MASK_COLORS: {
  [label in "diseased" | "healthy"]: [number, number, number];
} = {
  diseased: [214, 40, 40],
  healthy: [58, 160, 80],
};
export const MASK_ALPHA = 0.4;

export interface Frame {
  width: number;
  height: number;
  /** RGBA, 4 bytes per pixel */
  pixels: Uint8ClampedArray;
}

export function cloneFrame(frame: Frame): Frame {
  return {
    width: frame.width,
    height: frame.height,
    pixels: new Uint8ClampedArray(frame.pixels),
  };
}

function blendMask(frame: Frame, det: DetectionPayload): void {
  if (!det.mask_rle) return;
  const mask = decodeRle(det.mask_rle);
  const color = MASK_COLORS[det.label];
  for (let i = 0; i < mask.data.length; i++) {
    if (mask.data[i] !== 1) continue;
    const p = i * 4;
    for (let c = 0; c < 3; c++) {
      const base = frame.pixels[p + c] ?? 0;
      frame.pixels[p + c] = Math.round(
        (1 - MASK_ALPHA) * base + MASK_ALPHA * (color[c] ?? 0),
      );
    }
  }
}

function strokeBox(frame: Frame, det: DetectionPayload): void {
  const color = MASK_COLORS[det.label];
  const x0 = Math.max(0, Math.round(det.bbox[0]));
  const y0 = Math.max(0, Math.round(det.bbox[1]));
  const x1 = Math.min(frame.width - 1, Math.round(det.bbox[2]) - 1);
  const y1 = Math.min(frame.height - 1, Math.round(det.bbox[3]) - 1);
  const put = (x: number, y: number) => {
    const p = (y * frame.width + x) * 4;
    frame.pixels[p] = color[0] ?? 0;
    frame.pixels[p + 1] = color[1] ?? 0;
    frame.pixels[p + 2] = color[2] ?? 0;
  };
  for (let x = x0; x <= x1; x++) {
    put(x, y0);
    put(x, y1);
  }
  for (let y = y0; y <= y1; y++) {
    put(x0, y);
    put(x1, y);
  }
}

/**
 * Composite the requested layers over a copy of the base frame. The base
 * is never mutated.
 */
export function renderFrame(
  base: Frame,
  detections: DetectionPayload[],
  threshold: number,
  toggles: LayerToggles,
): Frame {
  const frame = cloneFrame(base);
  const kept = filterDetections(detections, threshold);
  if (toggles.masks) {
    for (const det of kept) blendMask(frame, det);
  }
  if (toggles.boxes) {
    for (const det of kept) strokeBox(frame, det);
  }
  return frame;
}
