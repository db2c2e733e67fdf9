from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260815)


def random_dist(rng: np.random.Generator, num_labels: int) -> np.ndarray:
    raw = rng.uniform(0.05, 1.0, num_labels)
    return raw / raw.sum()


def make_synthetic_video(num_frames: int = 400, height: int = 48, width: int = 64) -> list[np.ndarray]:
    """Static first half; an 8x8 block roaming with varied direction/speed
    in the second half."""
    background = np.full((height, width), 40.0)
    frames = [background.copy() for _ in range(num_frames // 2)]

    # (direction, speed, length) segments for the active half; the block
    # bounces off the walls so it never stalls
    segments = [
        ((1, 0), 2, 50),   # right, medium
        ((0, 1), 3, 50),   # down, fast
        ((-1, 0), 2, 50),  # left, medium
        ((0, -1), 3, 50),  # up, fast
    ]
    x, y = 8.0, 8.0
    x_max, y_max = float(width - 8), float(height - 8)
    for (dx, dy), speed, length in segments:
        vx, vy = float(dx * speed), float(dy * speed)
        for _ in range(length):
            frame = background.copy()
            xi, yi = int(round(x)), int(round(y))
            frame[yi:yi + 8, xi:xi + 8] = 220.0
            frames.append(frame)
            x += vx
            y += vy
            if x < 0.0 or x > x_max:
                vx = -vx
                x = min(max(x, 0.0), x_max)
            if y < 0.0 or y > y_max:
                vy = -vy
                y = min(max(y, 0.0), y_max)
    return frames[:num_frames]


def write_frames(frames: list[np.ndarray], directory: Path, ext: str = "pgm") -> None:
    from vidfuse import write_gray_image

    directory.mkdir(parents=True, exist_ok=True)
    digits = len(str(len(frames)))
    for i, pixels in enumerate(frames, start=1):
        write_gray_image(pixels.astype(np.uint8),
                         directory / f"frame_{i:0{digits}d}.{ext}")


@pytest.fixture(scope="session")
def synthetic_video_dir(tmp_path_factory: pytest.TempPathFactory) -> Path:
    directory = tmp_path_factory.mktemp("synthetic_video")
    write_frames(make_synthetic_video(), directory)
    return directory


def write_eval_fixture(directory: Path) -> tuple[Path, Path]:
    """Six videos, one video-level record each; hand-counted accuracy:
    class 0 -> 3/4 correct, class 1 -> 1/2 correct."""
    directory.mkdir(parents=True, exist_ok=True)
    preds_path = directory / "preds.jsonl"
    labels_path = directory / "labels.csv"
    predicted = {"v1": 0, "v2": 0, "v3": 0, "v4": 1, "v5": 1, "v6": 0}
    with open(preds_path, "w") as fh:
        for video_id, cls in predicted.items():
            dist = [0.2, 0.2]
            dist[cls] = 0.8
            fh.write(json.dumps({"video_id": video_id, "modality": "spatial",
                                 "level": "video", "dist": dist}) + "\n")
    with open(labels_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "label"])
        for video_id in ("v1", "v2", "v3", "v4"):
            writer.writerow([video_id, 0])
        for video_id in ("v5", "v6"):
            writer.writerow([video_id, 1])
    return preds_path, labels_path
