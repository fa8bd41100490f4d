"""HTTP API for photo submissions and disease reports.

Endpoints (all under /api/v1):

    POST /submissions            multipart upload, field name "image"
    GET  /submissions/{id}/report
    GET  /submissions/{id}/overlay
    GET  /healthz
    POST /admin/model            {"run_id": "..."} switches the active model

Uploads are validated (413 when too large, 422 when not a decodable image),
stored, queued, and processed by background workers; clients poll the
report endpoint until status moves past "queued"/"processing".
"""

from __future__ import annotations

import io
import queue
from contextlib import asynccontextmanager

from fastapi import FastAPI, File, HTTPException, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel

from ..errors import CheckpointError
from .config import ServiceConfig, config_from_env
from .store import SubmissionStore
from .worker import InferenceWorker, ModelManager, stop_workers

API_PREFIX = "/api/v1"


class ModelSwapRequest(BaseModel):
    run_id: str


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or config_from_env()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        store = SubmissionStore(config.storage_root)
        manager = ModelManager(config.runs_root)
        if config.model_run_id:
            manager.activate(config.model_run_id)
        work_queue: queue.Queue = queue.Queue()
        workers = [
            InferenceWorker(work_queue, store, manager, config)
            for _ in range(config.workers)
        ]
        for worker in workers:
            worker.start()
        app.state.store = store
        app.state.manager = manager
        app.state.queue = work_queue
        yield
        stop_workers(work_queue, workers)

    app = FastAPI(title="cropscan", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post(f"{API_PREFIX}/submissions", status_code=201)
    async def create_submission(image: UploadFile = File(...)):
        data = await image.read()
        if len(data) > config.max_upload_bytes:
            raise HTTPException(
                status_code=413,
                detail=f"upload of {len(data)} bytes exceeds limit {config.max_upload_bytes}",
            )
        try:
            with Image.open(io.BytesIO(data)) as probe:
                probe.verify()
                image_format = probe.format or "unknown"
        except (UnidentifiedImageError, OSError) as exc:
            raise HTTPException(
                status_code=422, detail=f"payload is not a decodable image: {exc}"
            ) from exc
        meta = app.state.store.create(
            data,
            image_format=image_format,
            original_name=image.filename or "upload",
            content_type=image.content_type or "application/octet-stream",
        )
        app.state.queue.put(meta.submission_id)
        return {"submission_id": meta.submission_id, "status": meta.status}

    @app.get(f"{API_PREFIX}/submissions/{{submission_id}}/report")
    async def get_report(submission_id: str):
        meta = app.state.store.get(submission_id)
        if meta is None:
            raise HTTPException(status_code=404, detail=f"unknown submission {submission_id}")
        if meta.status == "processed":
            report = app.state.store.report(submission_id)
            if report is not None:
                return report
        body = {"submission_id": submission_id, "status": meta.status}
        if meta.error:
            body["reason"] = meta.error
        return body

    @app.get(f"{API_PREFIX}/submissions/{{submission_id}}/overlay")
    async def get_overlay(submission_id: str):
        meta = app.state.store.get(submission_id)
        if meta is None:
            raise HTTPException(status_code=404, detail=f"unknown submission {submission_id}")
        if meta.status != "processed":
            raise HTTPException(
                status_code=409,
                detail=f"submission {submission_id} is {meta.status}, overlay not ready",
            )
        overlay = app.state.store.overlay(submission_id)
        if overlay is None:
            raise HTTPException(status_code=404, detail="overlay missing from storage")
        return Response(content=overlay, media_type="image/png")

    @app.get(f"{API_PREFIX}/healthz")
    async def healthz():
        run_id, _ = app.state.manager.current()
        return {
            "status": "ok",
            "model_run_id": run_id,
            "queue_depth": app.state.queue.qsize(),
        }

    @app.post(f"{API_PREFIX}/admin/model")
    async def swap_model(request: ModelSwapRequest):
        try:
            app.state.manager.activate(request.run_id)
        except CheckpointError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {"model_run_id": request.run_id}

    return app
