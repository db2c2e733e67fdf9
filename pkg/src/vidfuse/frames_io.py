"""Reading frame sequences and writing 8-bit grayscale images.

A frame sequence is a directory of same-sized PNG/PGM/PPM images, taken
in lexicographic filename order and numbered 1..N.  Color inputs are
converted to grayscale with the standard luma weights
``round(0.299 R + 0.587 G + 0.114 B)`` (half away from zero).

Grayscale output goes to binary PGM (``P5``, maxval 255) or 8-bit PNG,
chosen by file extension.
"""

from __future__ import annotations

import shutil
from pathlib import Path

import numpy as np
from PIL import Image

from .optical_flow import Frame

__all__ = [
    "FrameIngestError",
    "FRAME_EXTENSIONS",
    "rgb_to_gray",
    "load_gray_image",
    "ingest_frame_sequence",
    "write_gray_image",
    "copy_keyframes",
]

FRAME_EXTENSIONS = (".png", ".pgm", ".ppm")


class FrameIngestError(ValueError):
    """A frame directory or file that cannot be ingested."""


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """Convert an (H, W, 3) uint8 array to grayscale uint8 luma."""
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) array, got shape {rgb.shape}")
    luma = (0.299 * rgb[..., 0].astype(np.float64)
            + 0.587 * rgb[..., 1].astype(np.float64)
            + 0.114 * rgb[..., 2].astype(np.float64))
    # round half away from zero; values are non-negative
    return np.floor(luma + 0.5).astype(np.uint8)


def load_gray_image(path: str | Path) -> np.ndarray:
    """Load one image file as a uint8 grayscale array."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.mode == "L":
                return np.asarray(img, dtype=np.uint8)
            if img.mode == "I;16":  # 16-bit PGM; scale down to 8 bits
                arr = np.asarray(img, dtype=np.uint16)
                return (arr >> 8).astype(np.uint8)
            rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
            return rgb_to_gray(rgb)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise FrameIngestError(f"cannot read image {path}: {exc}") from exc


def ingest_frame_sequence(frames_dir: str | Path) -> list[Frame]:
    """Load a directory of frames, ordered and numbered 1..N.

    Only ``.png``/``.pgm``/``.ppm`` files (case-insensitive) are taken,
    in lexicographic filename order.  All frames must share one size;
    a mismatch is reported with the offending filename.
    """
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise FrameIngestError(f"frame directory {frames_dir} does not exist")
    paths = sorted(p for p in frames_dir.iterdir()
                   if p.is_file() and p.suffix.lower() in FRAME_EXTENSIONS)
    if not paths:
        raise FrameIngestError(
            f"no {'/'.join(FRAME_EXTENSIONS)} frames found in {frames_dir}")

    frames: list[Frame] = []
    shape: tuple[int, int] | None = None
    for k, path in enumerate(paths, start=1):
        pixels = load_gray_image(path)
        if shape is None:
            shape = pixels.shape  # type: ignore[assignment]
        elif pixels.shape != shape:
            raise FrameIngestError(
                f"frame {path.name} has size {pixels.shape[1]}x{pixels.shape[0]}, "
                f"expected {shape[1]}x{shape[0]} like the first frame")
        frames.append(Frame(pixels=pixels, index=k))
    return frames


def write_gray_image(pixels: np.ndarray, path: str | Path) -> None:
    """Write a uint8 grayscale array as PGM or PNG, by file extension."""
    path = Path(path)
    arr = np.asarray(pixels)
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise ValueError(f"expected a 2-D uint8 array, got {arr.dtype} shape {arr.shape}")
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        h, w = arr.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(arr.tobytes())
    elif suffix == ".png":
        Image.fromarray(arr, mode="L").save(path, format="PNG")
    else:
        raise ValueError(f"unsupported output extension {suffix!r} (use .pgm or .png)")


def copy_keyframes(frames_dir: str | Path, chosen: list[int], video_id: str,
                   out_dir: str | Path) -> list[Path]:
    """Copy the chosen frames' files into ``out_dir``.

    Files are renamed ``<video_id>_k<frame_index><ext>`` so downstream
    consumers can recover the video and frame from the name alone.
    """
    frames_dir = Path(frames_dir)
    out_dir = Path(out_dir)
    paths = sorted(p for p in frames_dir.iterdir()
                   if p.is_file() and p.suffix.lower() in FRAME_EXTENSIONS)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for k in chosen:
        if not (1 <= k <= len(paths)):
            raise FrameIngestError(
                f"chosen frame {k} out of range 1..{len(paths)} for {frames_dir}")
        src = paths[k - 1]
        dst = out_dir / f"{video_id}_k{k}{src.suffix.lower()}"
        shutil.copyfile(src, dst)
        written.append(dst)
    return written
