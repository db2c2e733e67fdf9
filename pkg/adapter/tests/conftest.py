from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

VIDEO_IDS = ("clip_a", "vid2")
FRAME_INDICES = (2, 17, 40)


def write_image(path: Path, seed: int) -> None:
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, (32, 32), dtype=np.uint8)
    Image.fromarray(pixels, mode="L").save(path)


def make_image_dirs(root: Path) -> tuple[Path, Path]:
    """Key-frame and flow-image directories for two videos, three frames
    each, in a mix of formats."""
    spatial = root / "keyframes"
    temporal = root / "features"
    spatial.mkdir(parents=True)
    temporal.mkdir(parents=True)
    seed = 0
    for video_id in VIDEO_IDS:
        for k, ext in zip(FRAME_INDICES, ("pgm", "png", "pgm")):
            write_image(spatial / f"{video_id}_k{k}.{ext}", seed)
            write_image(temporal / f"{video_id}_k{k}_flow.{ext}", seed + 1)
            seed += 2
    (spatial / "notes.txt").write_text("not an image")
    return spatial, temporal


@pytest.fixture(scope="session")
def image_dirs(tmp_path_factory: pytest.TempPathFactory) -> tuple[Path, Path]:
    return make_image_dirs(tmp_path_factory.mktemp("adapter_images"))


@pytest.fixture(scope="session")
def emitted(tmp_path_factory: pytest.TempPathFactory,
            image_dirs: tuple[Path, Path]) -> Path:
    """One shared inference run over the fixture images."""
    from classifier_adapter import AdapterConfig, emit_predictions

    out = tmp_path_factory.mktemp("adapter_out") / "preds.jsonl"
    config = AdapterConfig(spatial_dir=str(image_dirs[0]),
                           temporal_dir=str(image_dirs[1]),
                           output=str(out), num_classes=4,
                           model="squeezenet1_1", seed=7)
    count = emit_predictions(config)
    assert count == len(out.read_text().splitlines())
    return out
