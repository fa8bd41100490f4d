"""Background inference: model management and the submission worker loop."""

from __future__ import annotations

import queue
import threading
import time
import traceback
from pathlib import Path

import numpy as np

from .. import geometry
from ..errors import CheckpointError
from ..images import load_image_rgb, to_grayscale
from ..metrics import damage_extent, image_level_verdict
from ..models import detector as detector_mod
from ..models.runs import latest_checkpoint
from .config import ServiceConfig
from .overlay import render_overlay
from .store import SubmissionStore

_STOP = object()


class ModelManager:
    """Holds the active detector and swaps it atomically on request."""

    def __init__(self, runs_root: Path | str):
        self.runs_root = Path(runs_root)
        self._lock = threading.Lock()
        self._bundle: detector_mod.DetectorBundle | None = None
        self._run_id: str | None = None

    def activate(self, run_id: str) -> None:
        """Load the newest checkpoint of a run and make it the active model."""
        checkpoint = latest_checkpoint(self.runs_root / run_id)
        bundle = detector_mod.load_detector(checkpoint)
        with self._lock:
            self._bundle = bundle
            self._run_id = run_id

    def current(self) -> tuple[str | None, detector_mod.DetectorBundle | None]:
        with self._lock:
            return self._run_id, self._bundle


def process_submission(
    submission_id: str,
    store: SubmissionStore,
    manager: ModelManager,
    config: ServiceConfig,
) -> None:
    store.mark_processing(submission_id)
    started = time.monotonic()
    try:
        run_id, bundle = manager.current()
        if bundle is None:
            store.fail(submission_id, "no active model")
            return
        original = store.original_path(submission_id)
        if original is None:
            store.fail(submission_id, "original image is missing from storage")
            return
        image = load_image_rgb(original)
        height, width = image.shape[0], image.shape[1]

        detections = detector_mod.detect(bundle, image, score_floor=config.score_threshold)
        verdict = image_level_verdict(detections, config.score_threshold)
        extent = damage_extent(detections, (width, height))
        blur = geometry.blur_score(to_grayscale(image))

        report = {
            "submission_id": submission_id,
            "status": "processed",
            "image": {"width": width, "height": height},
            "model_run_id": run_id,
            "score_threshold": config.score_threshold,
            "verdict": verdict,
            "damage_extent": extent,
            "blur_score": blur,
            "detections": [
                {
                    "label": det.label,
                    "score": det.score,
                    "bbox": list(det.bbox),
                    "mask_rle": geometry.encode_rle(det.full_mask((width, height))),
                }
                for det in detections
            ],
            "timings": {"inference_seconds": round(time.monotonic() - started, 3)},
        }
        overlay_png = render_overlay(image, detections)
        store.complete(submission_id, report, overlay_png)
    except Exception:
        store.fail(submission_id, f"processing error: {traceback.format_exc(limit=3)}")


class InferenceWorker(threading.Thread):
    """Drains the submission queue; one instance per configured worker."""

    def __init__(
        self,
        work_queue: queue.Queue,
        store: SubmissionStore,
        manager: ModelManager,
        config: ServiceConfig,
    ):
        super().__init__(daemon=True)
        self.queue = work_queue
        self.store = store
        self.manager = manager
        self.config = config

    def run(self) -> None:
        while True:
            item = self.queue.get()
            if item is _STOP:
                self.queue.task_done()
                return
            try:
                process_submission(item, self.store, self.manager, self.config)
            finally:
                self.queue.task_done()


def stop_workers(work_queue: queue.Queue, workers: list[InferenceWorker]) -> None:
    for _ in workers:
        work_queue.put(_STOP)
    for worker in workers:
        worker.join(timeout=5.0)
