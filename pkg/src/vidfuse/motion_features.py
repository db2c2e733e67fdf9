"""Motion histograms over flow fields and redundancy screening.

Each flow field is summarized by two normalized histograms: one over
clamped flow magnitudes and one over full-quadrant flow directions.
Consecutive-frame histogram disparities form a series whose mean and
sample standard deviation set a data-driven redundancy threshold; an
anchor-based scan then discards frames whose motion barely differs from
the last kept frame.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .optical_flow import FlowField

__all__ = [
    "STILL_EPS",
    "HistogramConfig",
    "MotionHistogram",
    "DisparitySeries",
    "motion_histogram",
    "temporal_disparity",
    "redundancy_threshold",
    "reduce_redundancy",
    "export_histograms_csv",
    "export_disparity_csv",
]

#: Pixels whose flow magnitude falls below this are treated as still:
#: they land in magnitude bin 0 and contribute no direction vote.
STILL_EPS = 1e-9

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HistogramConfig:
    """Binning layout for motion histograms.

    ``mag_bins`` equal-width magnitude bins cover [0, ``mag_cap``] (values
    above the cap are clamped onto it); ``ang_bins`` equal-width direction
    bins cover [0, 2*pi).
    """

    mag_bins: int = 16
    ang_bins: int = 16
    mag_cap: float = 20.0

    def __post_init__(self) -> None:
        if self.mag_bins < 1:
            raise ValueError(f"mag_bins must be >= 1, got {self.mag_bins}")
        if self.ang_bins < 1:
            raise ValueError(f"ang_bins must be >= 1, got {self.ang_bins}")
        if not (self.mag_cap > 0.0 and np.isfinite(self.mag_cap)):
            raise ValueError(f"mag_cap must be a positive finite real, got {self.mag_cap}")


@dataclass(frozen=True)
class MotionHistogram:
    """Normalized magnitude and direction histograms for one frame.

    ``mag`` sums to 1 over all pixels; ``ang`` sums to 1 over the moving
    pixels, or is all-zero when the frame has none.  ``owner_index`` is
    the 1-based index of the frame the flow was computed from.
    """

    mag: np.ndarray
    ang: np.ndarray
    owner_index: int
    config: HistogramConfig

    def __post_init__(self) -> None:
        if self.mag.shape != (self.config.mag_bins,):
            raise ValueError(
                f"magnitude histogram has {self.mag.shape[0]} bins, "
                f"config says {self.config.mag_bins}")
        if self.ang.shape != (self.config.ang_bins,):
            raise ValueError(
                f"direction histogram has {self.ang.shape[0]} bins, "
                f"config says {self.config.ang_bins}")

    def concatenated(self) -> np.ndarray:
        """Magnitude bins followed by direction bins, as one vector."""
        return np.concatenate([self.mag, self.ang])


@dataclass(frozen=True)
class DisparitySeries:
    """Consecutive-frame disparities with their summary statistics.

    ``threshold`` is ``mean - sample_std`` and may be negative, in which
    case no frame is ever considered redundant.
    """

    values: np.ndarray
    mean: float
    sample_std: float
    threshold: float


def motion_histogram(flow: FlowField, config: HistogramConfig | None = None) -> MotionHistogram:
    """Summarize a flow field as normalized magnitude/direction histograms.

    Magnitudes are clamped to [0, ``mag_cap``] before binning; a value
    exactly at the cap lands in the last bin.  Directions come from the
    full-quadrant arctangent of (v, u) mapped onto [0, 2*pi).  Pixels
    with magnitude below ``STILL_EPS`` count toward magnitude bin 0 only
    and are excluded from the direction histogram.
    """
    if config is None:
        config = HistogramConfig()

    mag = flow.magnitudes().ravel()
    moving = mag >= STILL_EPS

    clamped = np.minimum(mag, config.mag_cap)
    width = config.mag_cap / config.mag_bins
    mag_idx = np.minimum((clamped / width).astype(np.int64), config.mag_bins - 1)
    mag_counts = np.bincount(mag_idx, minlength=config.mag_bins).astype(np.float64)
    mag_hist = mag_counts / mag.size

    ang_hist = np.zeros(config.ang_bins, dtype=np.float64)
    n_moving = int(moving.sum())
    if n_moving > 0:
        angles = np.arctan2(flow.v.ravel()[moving], flow.u.ravel()[moving])
        angles = np.where(angles < 0.0, angles + _TWO_PI, angles)
        ang_width = _TWO_PI / config.ang_bins
        ang_idx = np.minimum((angles / ang_width).astype(np.int64), config.ang_bins - 1)
        ang_counts = np.bincount(ang_idx, minlength=config.ang_bins).astype(np.float64)
        ang_hist = ang_counts / n_moving

    return MotionHistogram(mag=mag_hist, ang=ang_hist,
                           owner_index=flow.frame_index, config=config)


def temporal_disparity(h1: MotionHistogram, h2: MotionHistogram) -> float:
    """L1 distance between two frames' concatenated motion histograms.

    Both histograms must share the same binning layout.  For normalized
    inputs the result lies in [0, 4]: up to 2 from each histogram pair.
    """
    if h1.config != h2.config:
        raise ValueError(
            f"histogram layout mismatch: {h1.config} vs {h2.config}")
    return float(np.sum(np.abs(h1.concatenated() - h2.concatenated())))


def redundancy_threshold(values: Sequence[float] | np.ndarray) -> DisparitySeries:
    """Summary statistics and redundancy threshold for a disparity series.

    The threshold is the series mean minus its sample standard deviation
    (variance denominator ``len - 1``).  Requires at least two values.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"disparity series must be 1-D, got shape {arr.shape}")
    if arr.size < 2:
        raise ValueError(
            f"need at least 2 disparities to set a threshold, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("disparity series contains non-finite values")
    mean = float(arr.mean())
    sample_std = float(math.sqrt(np.sum((arr - mean) ** 2) / (arr.size - 1)))
    return DisparitySeries(
        values=arr.copy(),
        mean=mean,
        sample_std=sample_std,
        threshold=mean - sample_std,
    )


def reduce_redundancy(histograms: Sequence[MotionHistogram], threshold: float) -> list[int]:
    """Drop frames whose motion barely differs from the last kept frame.

    Scans the histograms in order, keeping the first frame as the anchor.
    Each later frame is discarded when its disparity to the current
    anchor is strictly below ``threshold``; otherwise it is kept and
    becomes the new anchor.  Returns the kept frames' ``owner_index``
    values in scan order — never empty, and always starting with the
    first frame.
    """
    if len(histograms) == 0:
        raise ValueError("cannot reduce an empty histogram sequence")
    kept = [histograms[0].owner_index]
    anchor = histograms[0]
    for h in histograms[1:]:
        if temporal_disparity(anchor, h) < threshold:
            continue
        kept.append(h.owner_index)
        anchor = h
    return kept


def export_histograms_csv(histograms: Sequence[MotionHistogram], path: str | Path) -> None:
    """Write one row per frame: index, magnitude bins, direction bins."""
    if len(histograms) == 0:
        raise ValueError("no histograms to export")
    config = histograms[0].config
    header = (["frame_index"]
              + [f"mag_{i}" for i in range(config.mag_bins)]
              + [f"ang_{i}" for i in range(config.ang_bins)])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for h in histograms:
            writer.writerow([h.owner_index] + [repr(x) for x in h.concatenated().tolist()])


def export_disparity_csv(series: DisparitySeries, frame_indices: Sequence[int],
                         path: str | Path) -> None:
    """Write one row per consecutive pair: earlier frame index, disparity."""
    if len(frame_indices) != series.values.size:
        raise ValueError(
            f"{series.values.size} disparities but {len(frame_indices)} frame indices")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_index", "disparity"])
        for k, td in zip(frame_indices, series.values.tolist()):
            writer.writerow([k, repr(td)])
