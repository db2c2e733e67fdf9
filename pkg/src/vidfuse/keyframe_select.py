"""Key-frame selection over a motion-disparity graph.

The surviving frames after redundancy screening form a complete graph
whose edge weights are pairwise motion-histogram disparities.  Selection
greedily harvests the heaviest *viable* edge per iteration, where an edge
is viable only if its endpoints are farther apart than a spacing floor —
from each other and from every frame already chosen.  Edges that fail the
check are permanently discarded.  The spacing floor scales inversely with
the number of key frames requested, so selections spread across the whole
video instead of clustering on one burst of motion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .motion_features import MotionHistogram

__all__ = [
    "compute_d_low",
    "FrameGraph",
    "SelectionResult",
    "build_frame_graph",
    "select_keyframes",
]


def compute_d_low(total_frames: int, n_kf: int) -> int:
    """Minimum timestamp spacing ``floor(N / (2*n_kf - 1))`` between picks.

    ``total_frames`` is the video's full frame count N (not the size of
    the screened subset).  ``n_kf`` must be at least 2.
    """
    if n_kf < 2:
        raise ValueError(f"need at least 2 key frames, got {n_kf}")
    if total_frames < 1:
        raise ValueError(f"total_frames must be >= 1, got {total_frames}")
    return total_frames // (2 * n_kf - 1)


@dataclass(frozen=True)
class FrameGraph:
    """Complete weighted graph over the screened frames.

    ``timestamps`` holds each node's original 1-based frame index, in
    strictly increasing order; ``weights`` is the symmetric non-negative
    disparity matrix with a zero diagonal.  Nodes are referred to by
    their position in ``timestamps``.
    """

    timestamps: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.timestamps)
        if n < 2:
            raise ValueError(f"graph needs at least 2 nodes, got {n}")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValueError("timestamps must be strictly increasing")
        if self.weights.shape != (n, n):
            raise ValueError(
                f"weight matrix shape {self.weights.shape} does not match {n} nodes")
        if not np.array_equal(self.weights, self.weights.T):
            raise ValueError("weight matrix must be symmetric")
        if np.any(self.weights < 0.0):
            raise ValueError("edge weights must be non-negative")
        if np.any(np.diagonal(self.weights) != 0.0):
            raise ValueError("weight matrix must have a zero diagonal")

    @property
    def num_nodes(self) -> int:
        return len(self.timestamps)

    def edge_weight(self, i: int, j: int) -> float:
        return float(self.weights[i, j])


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one selection run.

    ``chosen_edges`` lists the winning edges in selection order as
    ``(frame_index, frame_index)`` pairs (an odd request's final edge
    contributes only one frame).
    ``chosen_frames`` are the selected original frame indices, ascending.
    ``padded_frames`` marks the subset of ``chosen_frames`` added by
    gap-filling rather than edge selection; ``padded`` is True when that
    happened at all.
    """

    chosen_edges: tuple[tuple[int, int], ...]
    chosen_frames: tuple[int, ...]
    padded_frames: frozenset[int]
    d_low: int

    @property
    def padded(self) -> bool:
        return len(self.padded_frames) > 0

    def to_json_dict(self, video_id: str, n_kf: int) -> dict:
        return {
            "video_id": video_id,
            "n_kf": n_kf,
            "d_low": self.d_low,
            "chosen": [
                {"frame_index": k, "padded": k in self.padded_frames}
                for k in self.chosen_frames
            ],
            "edges": [[i, j] for i, j in self.chosen_edges],
        }

    def save_json(self, path: str | Path, video_id: str, n_kf: int) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(video_id, n_kf), fh, indent=2)
            fh.write("\n")


def build_frame_graph(histograms: Sequence[MotionHistogram]) -> FrameGraph:
    """Build the complete disparity graph over screened frames.

    Nodes keep their original frame indices as timestamps; edge weights
    are pairwise disparities of the frames' motion histograms.
    """
    if len(histograms) < 2:
        raise ValueError(
            f"graph needs at least 2 frames, got {len(histograms)}")
    timestamps = tuple(h.owner_index for h in histograms)
    stacked = np.stack([h.concatenated() for h in histograms])
    # pairwise L1 via broadcasting; one temporal_disparity call per pair
    # would give the same numbers but quadratically many Python calls
    diff = np.abs(stacked[:, None, :] - stacked[None, :, :]).sum(axis=2)
    np.fill_diagonal(diff, 0.0)
    return FrameGraph(timestamps=timestamps, weights=diff)


def _viable(graph: FrameGraph, i: int, j: int, chosen: list[int], d_low: int) -> bool:
    ts = graph.timestamps
    if abs(ts[i] - ts[j]) <= d_low:
        return False
    for c in chosen:
        if abs(ts[i] - ts[c]) <= d_low or abs(ts[j] - ts[c]) <= d_low:
            return False
    return True


def _pad_selection(graph: FrameGraph, chosen_nodes: list[int], n_kf: int) -> list[int]:
    """Fill up to ``n_kf`` with frames maximizing the min gap to the picks."""
    ts = graph.timestamps
    padded: list[int] = []
    remaining = [i for i in range(graph.num_nodes) if i not in chosen_nodes]
    while len(chosen_nodes) + len(padded) < n_kf and remaining:
        current = chosen_nodes + padded

        def min_gap(node: int) -> float:
            if not current:
                return math.inf
            return min(abs(ts[node] - ts[c]) for c in current)

        best = max(remaining, key=lambda node: (min_gap(node), -ts[node]))
        padded.append(best)
        remaining.remove(best)
    return padded


def select_keyframes(graph: FrameGraph, n_kf: int, total_frames: int) -> SelectionResult:
    """Greedy max-weight edge selection under the spacing floor.

    Runs ``ceil(n_kf / 2)`` iterations.  Each iteration screens the
    not-yet-discarded edges for viability — endpoint gap above ``d_low``,
    and both endpoints above ``d_low`` from every already-chosen frame —
    permanently discarding failures, then takes the heaviest survivor.
    Weight ties go to the edge with the earlier first timestamp, then the
    earlier second.  For an odd ``n_kf`` the final edge contributes only
    the endpoint farther from the frames already chosen (ties to the
    earlier timestamp).  Selection stops early once no viable edge
    remains; if fewer than ``n_kf`` frames came out, the result is padded
    with unchosen frames maximizing the minimum gap to the current picks
    (ties to the earlier timestamp) and flagged accordingly.
    """
    if n_kf < 2:
        raise ValueError(f"need at least 2 key frames, got {n_kf}")
    d_low = compute_d_low(total_frames, n_kf)
    ts = graph.timestamps
    n = graph.num_nodes

    discarded: set[tuple[int, int]] = set()
    chosen_nodes: list[int] = []
    chosen_edges: list[tuple[int, int]] = []
    iterations = math.ceil(n_kf / 2)

    for it in range(iterations):
        best: tuple[int, int] | None = None
        best_key: tuple[float, int, int] | None = None
        for i in range(n):
            for j in range(i + 1, n):
                if (i, j) in discarded:
                    continue
                if not _viable(graph, i, j, chosen_nodes, d_low):
                    discarded.add((i, j))
                    continue
                lo, hi = sorted((ts[i], ts[j]))
                key = (-graph.weights[i, j], lo, hi)
                if best_key is None or key < best_key:
                    best_key = key
                    best = (i, j)
        if best is None:
            break
        i, j = best
        chosen_edges.append((ts[i], ts[j]))
        discarded.add((i, j))
        final_single = (it == iterations - 1) and (n_kf % 2 == 1)
        if final_single:
            def dist_to_chosen(node: int) -> float:
                if not chosen_nodes:
                    return math.inf
                return min(abs(ts[node] - ts[c]) for c in chosen_nodes)

            di, dj = dist_to_chosen(i), dist_to_chosen(j)
            if di > dj or (di == dj and ts[i] < ts[j]):
                chosen_nodes.append(i)
            else:
                chosen_nodes.append(j)
        else:
            chosen_nodes.extend((i, j))

    padded_nodes = _pad_selection(graph, chosen_nodes, n_kf)
    all_nodes = chosen_nodes + padded_nodes
    return SelectionResult(
        chosen_edges=tuple(chosen_edges),
        chosen_frames=tuple(sorted(ts[i] for i in all_nodes)),
        padded_frames=frozenset(ts[i] for i in padded_nodes),
        d_low=d_low,
    )
