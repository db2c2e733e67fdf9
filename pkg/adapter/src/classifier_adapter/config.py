"""Adapter configuration: what to run, on which images, emitting where.

Accepts the same flat ``key = value`` file format as the pipeline CLI,
so one config file can carry both tools' settings side by side.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

__all__ = ["AdapterError", "AdapterConfig", "load_key_values"]


class AdapterError(ValueError):
    """A configuration or model problem that prevents inference."""


def load_key_values(path: str | Path) -> dict[str, str]:
    """Parse a ``key = value`` file (``#`` comments, blank lines skipped)."""
    result: dict[str, str] = {}
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise AdapterError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise AdapterError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise AdapterError(f"{path}:{lineno}: empty key in {raw!r}")
        if key in result:
            raise AdapterError(f"{path}:{lineno}: duplicate key {key!r}")
        result[key] = value.strip()
    return result


@dataclass(frozen=True)
class AdapterConfig:
    """Inference settings.

    ``spatial_dir`` holds key-frame images (``<video_id>_k<idx>.<ext>``)
    and ``temporal_dir`` holds flow-magnitude images
    (``<video_id>_k<idx>_flow.<ext>``); either may be empty, not both.
    ``num_classes`` sizes the linear head mapping the backbone's output
    to the experiment's label set.  Without ``head_weights`` the head
    (and the backbone, when no pretrained weights ship with the
    sandbox) is seeded randomly from ``seed`` — a deterministic
    stand-in that exercises the full interchange; point
    ``head_weights`` at a saved state dict to run a real head.
    """

    spatial_dir: str = ""
    temporal_dir: str = ""
    output: str = ""
    num_classes: int = 2
    model: str = "resnet18"
    head_weights: str = ""
    seed: int = 0
    batch_size: int = 16

    def __post_init__(self) -> None:
        if not self.spatial_dir and not self.temporal_dir:
            raise AdapterError("need at least one of spatial_dir / temporal_dir")
        if not self.output:
            raise AdapterError("output path must be set")
        if self.num_classes < 2:
            raise AdapterError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.batch_size < 1:
            raise AdapterError(f"batch_size must be >= 1, got {self.batch_size}")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "AdapterConfig":
        pairs = load_key_values(path)
        converters = {
            "spatial_dir": str, "temporal_dir": str, "output": str,
            "num_classes": int, "model": str, "head_weights": str,
            "seed": int, "batch_size": int,
        }
        known = {f.name for f in fields(cls)}
        kwargs: dict = {}
        for key, raw in pairs.items():
            if key not in known:
                raise AdapterError(f"{path}: unknown config key {key!r}")
            try:
                kwargs[key] = converters[key](raw)
            except ValueError as exc:
                raise AdapterError(f"{path}: bad value for {key!r}: {raw!r}") from exc
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**kwargs)
        except AdapterError as exc:
            raise AdapterError(f"{path}: {exc}") from exc
