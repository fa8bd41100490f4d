"""Service settings, sourced from the environment with sane defaults."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigurationError

ENV_PREFIX = "CROPSCAN_"


@dataclass(frozen=True)
class ServiceConfig:
    storage_root: Path = Path("service-data")
    runs_root: Path = Path("runs")
    model_run_id: str | None = None
    score_threshold: float = 0.5
    max_upload_bytes: int = 25_000_000
    workers: int = 1

    def __post_init__(self) -> None:
        if not (0.0 <= self.score_threshold <= 1.0):
            raise ConfigurationError(
                f"score_threshold must be in [0, 1], got {self.score_threshold}"
            )
        if self.max_upload_bytes < 1024:
            raise ConfigurationError(
                f"max_upload_bytes must be >= 1024, got {self.max_upload_bytes}"
            )
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def config_from_env() -> ServiceConfig:
    """Build a config from CROPSCAN_* environment variables.

    Recognized: STORAGE_ROOT, RUNS_ROOT, MODEL_RUN, SCORE_THRESHOLD,
    MAX_UPLOAD_BYTES, WORKERS.
    """
    kwargs = {}
    if _env("STORAGE_ROOT"):
        kwargs["storage_root"] = Path(_env("STORAGE_ROOT"))
    if _env("RUNS_ROOT"):
        kwargs["runs_root"] = Path(_env("RUNS_ROOT"))
    if _env("MODEL_RUN"):
        kwargs["model_run_id"] = _env("MODEL_RUN")
    if _env("SCORE_THRESHOLD"):
        try:
            kwargs["score_threshold"] = float(_env("SCORE_THRESHOLD"))
        except ValueError as exc:
            raise ConfigurationError(f"CROPSCAN_SCORE_THRESHOLD: {exc}") from exc
    if _env("MAX_UPLOAD_BYTES"):
        try:
            kwargs["max_upload_bytes"] = int(_env("MAX_UPLOAD_BYTES"))
        except ValueError as exc:
            raise ConfigurationError(f"CROPSCAN_MAX_UPLOAD_BYTES: {exc}") from exc
    if _env("WORKERS"):
        try:
            kwargs["workers"] = int(_env("WORKERS"))
        except ValueError as exc:
            raise ConfigurationError(f"CROPSCAN_WORKERS: {exc}") from exc
    return ServiceConfig(**kwargs)
