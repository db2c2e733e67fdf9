"""Batch classifier inference over key-frame images, exported as JSONL."""

from .config import AdapterConfig, AdapterError
from .inference import FrameImage, build_model, emit_predictions, scan_image_dir

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "FrameImage",
    "build_model",
    "emit_predictions",
    "scan_image_dir",
    "__version__",
]
