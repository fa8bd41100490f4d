"""Disk-backed submission store.

Each submission owns a directory under the storage root::

    <storage_root>/<submission_id>/
      meta.json        status and provenance
      original.<ext>   the uploaded bytes, untouched
      report.json      written when processing completes
      overlay.png      rendered overlay, same moment

Status moves queued -> processing -> processed | failed and never backwards.
The in-memory index is rebuilt from disk on startup so a restarted service
still serves earlier reports.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

STATUSES = ("queued", "processing", "processed", "failed")

_EXT_BY_FORMAT = {"JPEG": ".jpg", "PNG": ".png"}


@dataclass
class SubmissionMeta:
    submission_id: str
    status: str
    received_at: str
    original_name: str
    content_type: str
    error: str | None = None


class SubmissionStore:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._index: dict[str, SubmissionMeta] = {}
        self._load_existing()

    def _load_existing(self) -> None:
        for meta_path in self.root.glob("*/meta.json"):
            try:
                raw = json.loads(meta_path.read_text())
                meta = SubmissionMeta(**raw)
            except (json.JSONDecodeError, TypeError):
                continue  # half-written directory, skip it
            self._index[meta.submission_id] = meta

    def _dir(self, submission_id: str) -> Path:
        return self.root / submission_id

    def _persist(self, meta: SubmissionMeta) -> None:
        target = self._dir(meta.submission_id) / "meta.json"
        tmp = target.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(asdict(meta), indent=2))
        tmp.replace(target)

    def create(
        self, data: bytes, *, image_format: str, original_name: str, content_type: str
    ) -> SubmissionMeta:
        submission_id = uuid.uuid4().hex
        meta = SubmissionMeta(
            submission_id=submission_id,
            status="queued",
            received_at=datetime.now(timezone.utc).isoformat(),
            original_name=original_name,
            content_type=content_type,
        )
        directory = self._dir(submission_id)
        directory.mkdir(parents=True)
        ext = _EXT_BY_FORMAT.get(image_format, ".bin")
        (directory / f"original{ext}").write_bytes(data)
        with self._lock:
            self._persist(meta)
            self._index[submission_id] = meta
        return meta

    def get(self, submission_id: str) -> SubmissionMeta | None:
        with self._lock:
            return self._index.get(submission_id)

    def original_path(self, submission_id: str) -> Path | None:
        matches = sorted(self._dir(submission_id).glob("original.*"))
        return matches[0] if matches else None

    def mark_processing(self, submission_id: str) -> None:
        self._transition(submission_id, "processing")

    def complete(self, submission_id: str, report: dict, overlay_png: bytes) -> None:
        directory = self._dir(submission_id)
        (directory / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
        (directory / "overlay.png").write_bytes(overlay_png)
        self._transition(submission_id, "processed")

    def fail(self, submission_id: str, reason: str) -> None:
        self._transition(submission_id, "failed", error=reason)

    def _transition(self, submission_id: str, status: str, error: str | None = None) -> None:
        with self._lock:
            meta = self._index[submission_id]
            meta.status = status
            meta.error = error
            self._persist(meta)

    def report(self, submission_id: str) -> dict | None:
        path = self._dir(submission_id) / "report.json"
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def overlay(self, submission_id: str) -> bytes | None:
        path = self._dir(submission_id) / "overlay.png"
        if not path.exists():
            return None
        return path.read_bytes()
