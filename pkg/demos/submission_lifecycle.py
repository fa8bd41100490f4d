#!/usr/bin/env python3
"""The submission pipeline without HTTP: store, model manager, worker step.

The service wraps exactly these pieces behind FastAPI routes; driving them
directly shows what a submission goes through. For the real server, run
``cropscan serve`` with CROPSCAN_RUNS_ROOT and CROPSCAN_MODEL_RUN set.
"""

import io
import json
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from cropscan import ingest, synth
from cropscan.models import detector
from cropscan.service.config import ServiceConfig
from cropscan.service.store import SubmissionStore
from cropscan.service.worker import ModelManager, process_submission

work = Path(tempfile.mkdtemp(prefix="cropscan-svc-"))

# a model the manager can activate; zero epochs keeps the demo quick,
# which also means the verdicts below are noise rather than diagnosis
dataset_root = work / "dataset"
synth.generate_dataset(dataset_root, count=6, seed=2)
manifest = ingest.build_manifest(dataset_root)
config = detector.DetectorConfig(backbone="tiny", input_size=128, epochs=0, tiny_channels=32)
run = detector.train_detector(
    manifest, config, seed=0, root=dataset_root, run_dir=work / "runs" / "demo-model"
)
print(f"model run: {run.final_checkpoint}")

service_config = ServiceConfig(
    storage_root=work / "storage",
    runs_root=work / "runs",
    model_run_id="demo-model",
    score_threshold=0.3,
)
store = SubmissionStore(service_config.storage_root)
manager = ModelManager(service_config.runs_root)
manager.activate("demo-model")

# submit: bytes in, submission id out, exactly like the POST route
image = np.asarray(Image.open(dataset_root / manifest.records[0].file_path).convert("RGB"))
buffer = io.BytesIO()
Image.fromarray(image).save(buffer, format="PNG")
meta = store.create(buffer.getvalue(), image_format="PNG",
                    original_name="leaf.png", content_type="image/png")
print(f"submission {meta.submission_id}: status={meta.status}")

# process: what the worker thread does for each queued id
process_submission(meta.submission_id, store, manager, service_config)
report = store.report(meta.submission_id)
print(f"after processing: status={store.get(meta.submission_id).status}")
print(f"verdict: {report['verdict']}   extent: {report['damage_extent']:.4f}   "
      f"detections: {len(report['detections'])}")
print(f"blur score: {report['blur_score']:.1f}")

report_path = work / "report.json"
report_path.write_text(json.dumps(report, indent=2)[:100000])
overlay = store.overlay(meta.submission_id)
(work / "overlay.png").write_bytes(overlay)
print(f"\nreport: {report_path}")
print(f"overlay: {work / 'overlay.png'} ({len(overlay)} bytes)")
