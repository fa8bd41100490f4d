/** Report payload types and the client-side extent arithmetic. */

import { decodeRle, RleDocument } from "./rle.js";

export interface DetectionPayload {
  label: "healthy" | "diseased";
  score: number;
  bbox: [number, number, number, number];
  mask_rle?: RleDocument;
}

export interface ReportPayload {
  submission_id: string;
  status: string;
  image: { width: number; height: number };
  model_run_id: string | null;
  score_threshold: number;
  verdict: "healthy" | "diseased";
  damage_extent: number;
  blur_score: number;
  detections: DetectionPayload[];
  reason?: string;
}

export interface StatusPayload {
  submission_id: string;
  status: string;
  reason?: string;
}

/** Detections the slider keeps: score at or above the threshold. */
export function filterDetections(
  detections: DetectionPayload[],
  threshold: number,
): DetectionPayload[] {
  return detections.filter((det) => det.score >= threshold);
}

/**
 * Fraction of the image covered by the union of diseased masks among the
 * detections that survive the threshold. Overlapping masks count once;
 * this mirrors how the server computes the extent it reports.
 */
export function extentFromDetections(
  detections: DetectionPayload[],
  width: number,
  height: number,
  threshold: number,
): number {
  const union = new Uint8Array(width * height);
  for (const det of filterDetections(detections, threshold)) {
    if (det.label !== "diseased" || !det.mask_rle) continue;
    const mask = decodeRle(det.mask_rle);
    if (mask.width !== width || mask.height !== height) {
      throw new Error(
        `mask is ${mask.width}x${mask.height}, image is ${width}x${height}`,
      );
    }
    for (let i = 0; i < union.length; i++) {
      if (mask.data[i] === 1) union[i] = 1;
    }
  }
  let covered = 0;
  for (const v of union) covered += v;
  return covered / (width * height);
}

/** 0.1234 -> "12.3%"; what the report card shows. */
export function formatExtent(extent: number): string {
  return `${(Math.round(extent * 1000) / 10).toFixed(1)}%`;
}
