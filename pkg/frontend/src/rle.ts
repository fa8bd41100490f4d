/**
 * Decoder for the mask wire format served in report payloads.
 *
 * A document holds `size: [height, width]`, an alternating list of run
 * lengths in `counts` (the first run is background, possibly zero long),
 * and `order: "column-major"`: runs walk down column 0, then column 1,
 * and so on. Decoding returns a row-major byte mask so a pixel lives at
 * `data[y * width + x]`, which is what canvas rendering wants.
 */

export interface RleDocument {
  size: [number, number];
  counts: number[];
  order: string;
}

export interface DecodedMask {
  width: number;
  height: number;
  /** row-major, one byte per pixel, 0 or 1 */
  data: Uint8Array;
}

export function runSum(doc: RleDocument): number {
  return doc.counts.reduce((total, run) => total + run, 0);
}

/** Sum of the foreground runs only (every second entry). */
export function foregroundSum(doc: RleDocument): number {
  let total = 0;
  for (let i = 1; i < doc.counts.length; i += 2) {
    total += doc.counts[i] ?? 0;
  }
  return total;
}

export function decodeRle(doc: RleDocument): DecodedMask {
  if (doc.order !== "column-major") {
    throw new Error(`unsupported RLE order: ${doc.order}`);
  }
  const [height, width] = doc.size;
  if (!Number.isInteger(height) || !Number.isInteger(width) || height < 0 || width < 0) {
    throw new Error(`bad RLE size: ${doc.size}`);
  }
  const total = height * width;
  if (runSum(doc) !== total) {
    throw new Error(`RLE runs cover ${runSum(doc)} pixels, mask has ${total}`);
  }

  const data = new Uint8Array(total);
  let linear = 0; // position along the column-major walk
  let value = 0; // first run is always background
  for (const run of doc.counts) {
    if (run < 0 || !Number.isInteger(run)) {
      throw new Error(`bad run length: ${run}`);
    }
    if (value === 1) {
      for (let k = linear; k < linear + run; k++) {
        const y = k % height;
        const x = (k - y) / height;
        data[y * width + x] = 1;
      }
    }
    linear += run;
    value = 1 - value;
  }
  return { width, height, data };
}

export function pixelCount(mask: DecodedMask): number {
  let count = 0;
  for (const v of mask.data) count += v;
  return count;
}
