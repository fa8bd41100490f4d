import { RleDocument } from "../src/rle.js";
import { DetectionPayload } from "../src/report.js";
import { Frame } from "../src/overlay.js";

/**
 * Column-major RLE for a row-major 0/1 grid. This is the encoding the
 * server applies before shipping a mask over the wire, reimplemented
 * here so tests can build documents from pictures instead of counting
 * runs by hand.
 */
export function encodeGrid(rows: number[][]): RleDocument {
  const height = rows.length;
  const width = rows[0]?.length ?? 0;
  const counts: number[] = [];
  let expected = 0;
  let run = 0;
  for (let x = 0; x < width; x++) {
    for (let y = 0; y < height; y++) {
      const v = rows[y]?.[x] ?? 0;
      if (v === expected) {
        run++;
      } else {
        counts.push(run);
        expected = v;
        run = 1;
      }
    }
  }
  counts.push(run);
  return { size: [height, width], counts, order: "column-major" };
}

/** Zero grid with the given pixels (x, y) switched on. */
export function gridFromPixels(
  width: number,
  height: number,
  pixels: Array<[number, number]>,
): number[][] {
  const rows = Array.from({ length: height }, () => new Array<number>(width).fill(0));
  for (const [x, y] of pixels) {
    const row = rows[y];
    if (row === undefined) throw new Error(`pixel (${x}, ${y}) outside ${width}x${height}`);
    row[x] = 1;
  }
  return rows;
}

export function detection(
  label: "healthy" | "diseased",
  score: number,
  bbox: [number, number, number, number],
  mask?: RleDocument,
): DetectionPayload {
  const det: DetectionPayload = { label, score, bbox };
  if (mask) det.mask_rle = mask;
  return det;
}

export function solidFrame(
  width: number,
  height: number,
  rgb: [number, number, number],
): Frame {
  const pixels = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < width * height; i++) {
    pixels[i * 4] = rgb[0];
    pixels[i * 4 + 1] = rgb[1];
    pixels[i * 4 + 2] = rgb[2];
    pixels[i * 4 + 3] = 255;
  }
  return { width, height, pixels };
}
