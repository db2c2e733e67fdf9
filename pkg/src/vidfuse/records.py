"""JSON-lines interchange of classifier predictions.

One record per line::

    {"video_id": "v01", "modality": "spatial", "level": "frame",
     "frame_index": 17, "dist": [0.1, 0.9]}

``level`` is ``"frame"`` or ``"video"``; ``frame_index`` is required for
frame-level records and must be absent from video-level ones.  A record's
``dist`` must sum to 1 within 1e-6 — slightly-off sums are renormalized
on input, anything further off is rejected.  Unknown extra fields are
tolerated and ignored, so producers may attach their own metadata.

All parse failures raise :class:`RecordParseError` carrying the 1-based
line number.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .conflation import ProbDist
from .fusion_engine import PredictionBundle

__all__ = [
    "RecordParseError",
    "PredictionRecord",
    "parse_prediction_records",
    "write_prediction_records",
    "group_into_bundles",
]

#: A dist whose sum deviates from 1 by more than this is rejected.
_SUM_REJECT_TOL = 1e-6

#: A dist whose sum is already within this of 1 is kept bit-for-bit, so
#: that parse -> serialize -> parse round-trips records exactly.
_SUM_KEEP_TOL = 1e-12

_LEVELS = ("frame", "video")


class RecordParseError(ValueError):
    """A malformed prediction record, with its 1-based line number."""

    def __init__(self, line_number: int, message: str) -> None:
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


@dataclass(frozen=True)
class PredictionRecord:
    """One classifier output: a distribution at frame or video level."""

    video_id: str
    modality: str
    level: str
    dist: ProbDist
    frame_index: int | None = None

    def __post_init__(self) -> None:
        if self.level not in _LEVELS:
            raise ValueError(f"level must be one of {_LEVELS}, got {self.level!r}")
        if self.level == "frame":
            if self.frame_index is None:
                raise ValueError("frame-level record requires frame_index")
            if self.frame_index < 1:
                raise ValueError(f"frame_index must be >= 1, got {self.frame_index}")
        elif self.frame_index is not None:
            raise ValueError("video-level record must not carry frame_index")
        if not self.video_id:
            raise ValueError("video_id must be non-empty")
        if not self.modality:
            raise ValueError("modality must be non-empty")

    def to_json_dict(self) -> dict:
        out: dict = {
            "video_id": self.video_id,
            "modality": self.modality,
            "level": self.level,
        }
        if self.level == "frame":
            out["frame_index"] = self.frame_index
        out["dist"] = self.dist.probs.tolist()
        return out


def _parse_dist(raw: object, line_number: int) -> ProbDist:
    if not isinstance(raw, list) or len(raw) < 2:
        raise RecordParseError(line_number, f"dist must be a list of >= 2 numbers, got {raw!r}")
    values = []
    for x in raw:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise RecordParseError(line_number, f"dist entry {x!r} is not a finite number")
        if x < 0:
            raise RecordParseError(line_number, f"dist entry {x!r} is negative")
        values.append(float(x))
    arr = np.asarray(values, dtype=np.float64)
    total = float(arr.sum())
    if abs(total - 1.0) > _SUM_REJECT_TOL:
        raise RecordParseError(
            line_number, f"dist sums to {total!r}, outside 1 +/- {_SUM_REJECT_TOL}")
    if abs(total - 1.0) > _SUM_KEEP_TOL:
        arr = arr / total
    return ProbDist(arr)


def _parse_line(line: str, line_number: int) -> PredictionRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordParseError(line_number, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise RecordParseError(line_number, f"record must be a JSON object, got {type(obj).__name__}")

    for key in ("video_id", "modality", "level", "dist"):
        if key not in obj:
            raise RecordParseError(line_number, f"missing required field {key!r}")
    video_id = obj["video_id"]
    modality = obj["modality"]
    level = obj["level"]
    if not isinstance(video_id, str) or not video_id:
        raise RecordParseError(line_number, f"video_id must be a non-empty string, got {video_id!r}")
    if not isinstance(modality, str) or not modality:
        raise RecordParseError(line_number, f"modality must be a non-empty string, got {modality!r}")
    if level not in _LEVELS:
        raise RecordParseError(line_number, f"level must be 'frame' or 'video', got {level!r}")

    frame_index = None
    if level == "frame":
        if "frame_index" not in obj:
            raise RecordParseError(line_number, "frame-level record missing frame_index")
        frame_index = obj["frame_index"]
        if isinstance(frame_index, bool) or not isinstance(frame_index, int) or frame_index < 1:
            raise RecordParseError(
                line_number, f"frame_index must be a positive integer, got {frame_index!r}")
    elif "frame_index" in obj:
        raise RecordParseError(line_number, "video-level record must not carry frame_index")

    dist = _parse_dist(obj["dist"], line_number)
    return PredictionRecord(video_id=video_id, modality=modality, level=level,
                            dist=dist, frame_index=frame_index)


def parse_prediction_records(source: str | Path | IO[str]) -> list[PredictionRecord]:
    """Parse a JSONL prediction file (or open text stream).

    Blank lines are ignored.  Raises :class:`RecordParseError` naming the
    first offending line.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r") as fh:
            return _parse_stream(fh)
    return _parse_stream(source)


def _parse_stream(fh: Iterable[str]) -> list[PredictionRecord]:
    records = []
    for line_number, line in enumerate(fh, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        records.append(_parse_line(stripped, line_number))
    return records


def write_prediction_records(records: Iterable[PredictionRecord], path: str | Path) -> None:
    """Write records as one JSON object per line, full float precision."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict()) + "\n")


def group_into_bundles(records: list[PredictionRecord]) -> list[PredictionBundle]:
    """Group records into one :class:`PredictionBundle` per video.

    Videos keep their first-appearance order, as do modalities within a
    video; frame-level predictions are sorted by frame index.  Duplicate
    (video, modality, level, frame) combinations are an error.
    """
    by_video: dict[str, list[PredictionRecord]] = {}
    for rec in records:
        by_video.setdefault(rec.video_id, []).append(rec)

    bundles = []
    for video_id, recs in by_video.items():
        modalities: list[str] = []
        frame_preds: dict[str, dict[int, ProbDist]] = {}
        video_preds: dict[str, ProbDist] = {}
        for rec in recs:
            if rec.modality not in modalities:
                modalities.append(rec.modality)
            if rec.level == "frame":
                per_mod = frame_preds.setdefault(rec.modality, {})
                if rec.frame_index in per_mod:
                    raise ValueError(
                        f"video {video_id!r}: duplicate frame-level record for "
                        f"modality {rec.modality!r}, frame {rec.frame_index}")
                per_mod[rec.frame_index] = rec.dist
            else:
                if rec.modality in video_preds:
                    raise ValueError(
                        f"video {video_id!r}: duplicate video-level record for "
                        f"modality {rec.modality!r}")
                video_preds[rec.modality] = rec.dist
        bundles.append(PredictionBundle(
            video_id=video_id,
            modalities=tuple(modalities),
            frame_preds={m: tuple(sorted(d.items())) for m, d in frame_preds.items()},
            video_preds=video_preds,
        ))
    return bundles
