"""Batch inference over key-frame images, exported as prediction records.

The record schema matches the pipeline's JSONL interchange exactly::

    {"video_id": ..., "modality": ..., "level": "frame",
     "frame_index": ..., "dist": [...]}

plus one mean-pooled video-level record per (video, modality) tagged
``"source": "pooled"`` — a documented stand-in for a trained sequence
head, distinguishable downstream thanks to the parser's tolerance for
extra fields.
"""

from __future__ import annotations

import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torchvision
from PIL import Image
from torchvision import transforms

from .config import AdapterConfig, AdapterError

__all__ = ["FrameImage", "scan_image_dir", "build_model", "emit_predictions"]

_IMAGE_EXTENSIONS = (".png", ".pgm", ".ppm")

#: `<video_id>_k<idx>.<ext>` for key frames, `<video_id>_k<idx>_flow.<ext>`
#: for flow-magnitude images; video ids may themselves contain underscores.
_NAME_RE = re.compile(r"^(?P<video_id>.+)_k(?P<index>\d+)(?P<flow>_flow)?$")

_BACKBONE_OUT = 1000  # classification backbones end in an ImageNet-sized layer

_PREPROCESS = transforms.Compose([
    transforms.Resize((224, 224)),
    transforms.ToTensor(),
    transforms.Normalize(mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]),
])


@dataclass(frozen=True)
class FrameImage:
    """One input image, located and named but not yet loaded."""

    path: Path
    video_id: str
    modality: str
    frame_index: int


def scan_image_dir(directory: str | Path, modality: str,
                   expect_flow: bool) -> list[FrameImage]:
    """Find and name-parse the images of one modality directory.

    Files that are not images or do not follow the naming scheme are
    ignored; an empty result is the caller's problem to diagnose.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise AdapterError(f"image directory {directory} does not exist")
    found = []
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in _IMAGE_EXTENSIONS:
            continue
        match = _NAME_RE.match(path.stem)
        if match is None or bool(match.group("flow")) != expect_flow:
            continue
        found.append(FrameImage(path=path, video_id=match.group("video_id"),
                                modality=modality,
                                frame_index=int(match.group("index"))))
    return found


def build_model(config: AdapterConfig) -> torch.nn.Module:
    """Backbone named in the config plus a linear head sized to the label set.

    The sandbox has no pretrained-weight downloads, so the backbone
    initializes from ``config.seed`` — deterministic, and honest about
    being a stand-in.  ``head_weights`` optionally loads a saved head
    state dict for real remapping.
    """
    factory = getattr(torchvision.models, config.model, None)
    if factory is None or not callable(factory):
        raise AdapterError(f"unknown torchvision model {config.model!r}")
    torch.manual_seed(config.seed)
    try:
        backbone = factory(weights=None)
    except TypeError as exc:
        raise AdapterError(f"{config.model!r} is not a classification model "
                           f"constructor: {exc}") from exc
    head = torch.nn.Linear(_BACKBONE_OUT, config.num_classes)
    if config.head_weights:
        try:
            state = torch.load(config.head_weights, map_location="cpu",
                               weights_only=True)
            head.load_state_dict(state)
        except (OSError, RuntimeError, ValueError) as exc:
            raise AdapterError(
                f"cannot load head weights from {config.head_weights}: {exc}") from exc
    model = torch.nn.Sequential(backbone, head, torch.nn.Softmax(dim=1))
    model.eval()
    return model


def _load_batch(images: list[FrameImage]) -> tuple[torch.Tensor, list[FrameImage]]:
    """Load and preprocess a batch, dropping unreadable files with a warning."""
    tensors = []
    kept = []
    for image in images:
        try:
            with Image.open(image.path) as img:
                tensors.append(_PREPROCESS(img.convert("RGB")))
        except (OSError, SyntaxError) as exc:
            print(f"vidfuse-adapter: warning: skipping unreadable image "
                  f"{image.path}: {exc}", file=sys.stderr)
            continue
        kept.append(image)
    if not tensors:
        return torch.empty(0), kept
    return torch.stack(tensors), kept


def _predict(model: torch.nn.Module, images: list[FrameImage],
             batch_size: int) -> list[tuple[FrameImage, np.ndarray]]:
    results = []
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            batch, kept = _load_batch(images[start:start + batch_size])
            if not kept:
                continue
            probs = model(batch).double().numpy()
            # float64 renormalization keeps serialized sums exact
            probs /= probs.sum(axis=1, keepdims=True)
            results.extend(zip(kept, probs))
    return results


def emit_predictions(config: AdapterConfig) -> int:
    """Run inference and write the JSONL records; returns the record count."""
    images: list[FrameImage] = []
    if config.spatial_dir:
        images += scan_image_dir(config.spatial_dir, "spatial", expect_flow=False)
    if config.temporal_dir:
        images += scan_image_dir(config.temporal_dir, "temporal", expect_flow=True)
    if not images:
        raise AdapterError("no key-frame images found in the input directories")

    model = build_model(config)
    predictions = _predict(model, images, config.batch_size)
    if not predictions:
        raise AdapterError("every input image was unreadable; nothing to emit")

    # frame records first within each (video, modality), pooled record after
    keyed: list[tuple[tuple, dict]] = []
    pooled: dict[tuple[str, str], list[np.ndarray]] = {}
    for image, probs in predictions:
        keyed.append((
            (image.video_id, image.modality, 0, image.frame_index),
            {"video_id": image.video_id, "modality": image.modality,
             "level": "frame", "frame_index": image.frame_index,
             "dist": probs.tolist()},
        ))
        pooled.setdefault((image.video_id, image.modality), []).append(probs)
    for (video_id, modality), dists in pooled.items():
        mean = np.mean(dists, axis=0)
        mean /= mean.sum()
        keyed.append((
            (video_id, modality, 1, 0),
            {"video_id": video_id, "modality": modality, "level": "video",
             "dist": mean.tolist(), "source": "pooled"},
        ))

    keyed.sort(key=lambda pair: pair[0])
    out_path = Path(config.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as fh:
        for _, row in keyed:
            fh.write(json.dumps(row) + "\n")
    return len(keyed)
