from .app import create_app
from .config import ServiceConfig, config_from_env
from .overlay import render_overlay
from .store import SubmissionStore
from .worker import InferenceWorker, ModelManager, process_submission

__all__ = [
    "create_app",
    "ServiceConfig",
    "config_from_env",
    "render_overlay",
    "SubmissionStore",
    "InferenceWorker",
    "ModelManager",
    "process_submission",
]
