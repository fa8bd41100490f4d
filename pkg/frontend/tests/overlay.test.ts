import { describe, expect, it } from "vitest";
import { MASK_ALPHA, MASK_COLORS, cloneFrame, renderFrame } from "../src/overlay.js";
import { detection, encodeGrid, gridFromPixels, solidFrame } from "./helpers.js";

const WIDTH = 9;
const HEIGHT = 6;

// 3x3 lesion at columns 2-4, rows 1-3; its bbox hugs the same block
const LESION = encodeGrid(
  gridFromPixels(WIDTH, HEIGHT, [
    [2, 1], [3, 1], [4, 1],
    [2, 2], [3, 2], [4, 2],
    [2, 3], [3, 3], [4, 3],
  ]),
);
const DETECTIONS = [
  detection("diseased", 0.9, [2, 1, 5, 4], LESION),
  detection("healthy", 0.6, [6, 0, 9, 3], encodeGrid(gridFromPixels(WIDTH, HEIGHT, [[7, 1]]))),
];

const BOTH_ON = { masks: true, boxes: true };

function rgba(frame: { width: number; pixels: Uint8ClampedArray }, x: number, y: number) {
  const p = (y * frame.width + x) * 4;
  return [
    frame.pixels[p],
    frame.pixels[p + 1],
    frame.pixels[p + 2],
    frame.pixels[p + 3],
  ];
}

describe("renderFrame", () => {
  it("never mutates the base frame", () => {
    const base = solidFrame(WIDTH, HEIGHT, [10, 20, 30]);
    const before = Array.from(base.pixels);
    renderFrame(base, DETECTIONS, 0.0, BOTH_ON);
    expect(Array.from(base.pixels)).toEqual(before);
  });

  it("re-rendering with the same inputs is byte-identical", () => {
    const base = solidFrame(WIDTH, HEIGHT, [10, 20, 30]);
    const first = renderFrame(base, DETECTIONS, 0.0, BOTH_ON);
    const toggledOff = renderFrame(base, DETECTIONS, 0.0, { masks: false, boxes: true });
    const backOn = renderFrame(base, DETECTIONS, 0.0, BOTH_ON);
    expect(Array.from(toggledOff.pixels)).not.toEqual(Array.from(first.pixels));
    expect(Array.from(backOn.pixels)).toEqual(Array.from(first.pixels));
  });

  it("blends mask pixels at the documented alpha and leaves the rest", () => {
    const base = solidFrame(WIDTH, HEIGHT, [0, 0, 0]);
    const frame = renderFrame(base, DETECTIONS, 0.0, { masks: true, boxes: false });
    const color = MASK_COLORS.diseased!;
    const expected = color.map((c) => Math.round(MASK_ALPHA * c));
    expect(rgba(frame, 3, 2)).toEqual([...expected, 255]);
    expect(rgba(frame, 0, 0)).toEqual([0, 0, 0, 255]);
    expect(rgba(frame, 5, 5)).toEqual([0, 0, 0, 255]);
  });

  it("strokes the box frame without filling its interior", () => {
    const base = solidFrame(WIDTH, HEIGHT, [0, 0, 0]);
    const frame = renderFrame(
      base,
      [detection("diseased", 0.9, [2, 1, 5, 4])],
      0.0,
      { masks: true, boxes: true },
    );
    const color = MASK_COLORS.diseased!;
    expect(rgba(frame, 2, 1)).toEqual([...color, 255]);
    expect(rgba(frame, 4, 3)).toEqual([...color, 255]);
    expect(rgba(frame, 3, 2)).toEqual([0, 0, 0, 255]);
  });

  it("drops detections below the threshold", () => {
    const base = solidFrame(WIDTH, HEIGHT, [10, 20, 30]);
    const frame = renderFrame(base, DETECTIONS, 0.95, BOTH_ON);
    expect(Array.from(frame.pixels)).toEqual(Array.from(base.pixels));
  });

  it("with both layers off returns the base unchanged", () => {
    const base = solidFrame(WIDTH, HEIGHT, [10, 20, 30]);
    const frame = renderFrame(base, DETECTIONS, 0.0, { masks: false, boxes: false });
    expect(Array.from(frame.pixels)).toEqual(Array.from(base.pixels));
    expect(frame.pixels).not.toBe(base.pixels);
  });

  it("healthy and diseased detections use their own colors", () => {
    const base = solidFrame(WIDTH, HEIGHT, [0, 0, 0]);
    const frame = renderFrame(base, DETECTIONS, 0.0, { masks: true, boxes: false });
    const healthy = MASK_COLORS.healthy!.map((c) => Math.round(MASK_ALPHA * c));
    expect(rgba(frame, 7, 1)).toEqual([...healthy, 255]);
  });
});

describe("cloneFrame", () => {
  it("copies the pixel buffer instead of aliasing it", () => {
    const base = solidFrame(2, 2, [1, 2, 3]);
    const copy = cloneFrame(base);
    copy.pixels[0] = 200;
    expect(base.pixels[0]).toBe(1);
  });
});
