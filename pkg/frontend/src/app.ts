/**
 * DOM wiring for the single-page app. All logic that merits tests lives
 * in rle.ts / report.ts / api.ts / overlay.ts; this file only moves data
 * between those modules and the page.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  DetectionPayload,
  ReportPayload,
  extentFromDetections,
  filterDetections,
  formatExtent,
} from "./report.js";
import { Frame, renderFrame } from "./overlay.js";

interface SubmissionView {
  submissionId: string;
  filename: string;
  status: string;
  report?: ReportPayload;
  imageUrl: string;
}

const api = new ApiClient({});
const submissions: SubmissionView[] = [];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function statusChip(status: string): HTMLElement {
  return el("span", `chip chip-${status}`, status);
}

async function loadFrame(url: string): Promise<Frame> {
  const image = new Image();
  image.src = url;
  await image.decode();
  const canvas = document.createElement("canvas");
  canvas.width = image.naturalWidth;
  canvas.height = image.naturalHeight;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  ctx.drawImage(image, 0, 0);
  const data = ctx.getImageData(0, 0, canvas.width, canvas.height);
  return { width: data.width, height: data.height, pixels: data.data };
}

function renderDetectionRows(
  container: HTMLElement,
  detections: DetectionPayload[],
  threshold: number,
  onHover: (det: DetectionPayload | null) => void,
): void {
  container.replaceChildren();
  for (const det of filterDetections(detections, threshold)) {
    const row = el("div", "det-row");
    row.append(
      el("span", `det-label det-${det.label}`, det.label),
      el("span", "det-score", det.score.toFixed(2)),
    );
    row.addEventListener("mouseenter", () => onHover(det));
    row.addEventListener("mouseleave", () => onHover(null));
    container.append(row);
  }
  if (container.childElementCount === 0) {
    container.append(el("div", "det-empty", "no detections at this threshold"));
  }
}

function openViewer(view: SubmissionView): void {
  const report = view.report;
  if (!report) return;
  const panel = document.getElementById("viewer");
  if (!panel) return;
  panel.replaceChildren();
  panel.classList.remove("hidden");

  const canvas = el("canvas");
  const detList = el("div", "det-list");
  const toggles = { masks: true, boxes: true };
  let threshold = 0.0;
  let highlighted: DetectionPayload | null = null;
  let base: Frame | null = null;

  const paint = () => {
    if (!base) return;
    const shown = highlighted
      ? [highlighted]
      : filterDetections(report.detections, threshold);
    const frame = renderFrame(base, shown, 0.0, toggles);
    canvas.width = frame.width;
    canvas.height = frame.height;
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.putImageData(
      new ImageData(new Uint8ClampedArray(frame.pixels), frame.width, frame.height),
      0,
      0,
    );
    extentLabel.textContent = `extent at slider: ${formatExtent(
      extentFromDetections(report.detections, report.image.width, report.image.height, threshold),
    )}`;
  };

  const rebuildRows = () => {
    renderDetectionRows(detList, report.detections, threshold, (det) => {
      highlighted = det;
      paint();
    });
  };

  const draw = () => {
    paint();
    rebuildRows();
  };

  const slider = el("input") as HTMLInputElement;
  slider.type = "range";
  slider.min = "0";
  slider.max = "1";
  slider.step = "0.01";
  slider.value = "0";
  slider.addEventListener("input", () => {
    threshold = Number(slider.value);
    draw();
  });

  const maskToggle = el("button", "toggle", "masks: on");
  maskToggle.addEventListener("click", () => {
    toggles.masks = !toggles.masks;
    maskToggle.textContent = `masks: ${toggles.masks ? "on" : "off"}`;
    draw();
  });
  const boxToggle = el("button", "toggle", "boxes: on");
  boxToggle.addEventListener("click", () => {
    toggles.boxes = !toggles.boxes;
    boxToggle.textContent = `boxes: ${toggles.boxes ? "on" : "off"}`;
    draw();
  });

  const extentLabel = el("div", "extent-label");
  const header = el("div", "viewer-header");
  header.append(
    el("strong", undefined, `${view.filename}: ${report.verdict}`),
    el("span", undefined, ` reported extent ${formatExtent(report.damage_extent)}`),
  );
  panel.append(header, slider, maskToggle, boxToggle, extentLabel, canvas, detList);

  // the uploaded photo itself is the base layer; detections go on top
  loadFrame(view.imageUrl).then((frame) => {
    base = frame;
    draw();
  });
}

function renderList(): void {
  const list = document.getElementById("submissions");
  if (!list) return;
  list.replaceChildren();
  for (const view of submissions) {
    const row = el("div", "submission-row");
    const thumb = el("img", "thumb") as HTMLImageElement;
    thumb.src = view.imageUrl;
    row.append(thumb, el("span", "filename", view.filename), statusChip(view.status));
    if (view.report && view.status === "processed") {
      row.append(
        el("span", "verdict", view.report.verdict),
        el("span", "extent", formatExtent(view.report.damage_extent)),
      );
      row.addEventListener("click", () => openViewer(view));
      row.classList.add("clickable");
    }
    if (view.status === "failed") {
      row.append(el("span", "error-text", view.report?.reason ?? "processing failed"));
    }
    list.append(row);
  }
}

function showError(message: string): void {
  const banner = document.getElementById("error-banner");
  if (!banner) return;
  banner.textContent = message;
  banner.classList.remove("hidden");
  setTimeout(() => banner.classList.add("hidden"), 6000);
}

async function handleUpload(file: File): Promise<void> {
  const view: SubmissionView = {
    submissionId: "",
    filename: file.name,
    status: "uploading",
    imageUrl: URL.createObjectURL(file),
  };
  submissions.unshift(view);
  renderList();
  try {
    view.submissionId = await api.submit(file, file.name);
    view.status = "queued";
    renderList();
    const result = await api.pollReport(view.submissionId, (status) => {
      view.status = status;
      renderList();
    });
    view.status = result.status;
    if (result.status === "processed") {
      view.report = result as ReportPayload;
    }
    renderList();
  } catch (error) {
    submissions.splice(submissions.indexOf(view), 1);
    renderList();
    showError(error instanceof ApiError ? error.message : `upload failed: ${error}`);
  }
}

function init(): void {
  const input = document.getElementById("file-input") as HTMLInputElement | null;
  if (!input) return;
  input.addEventListener("change", () => {
    const file = input.files?.[0];
    if (file) void handleUpload(file);
    input.value = "";
  });
}

document.addEventListener("DOMContentLoaded", init);
