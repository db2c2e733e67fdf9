"""Multi-tier fusion of per-frame and per-video class distributions.

A video arrives as a bundle of classifier outputs: for each modality
(e.g. appearance and motion streams), optionally one distribution per
key frame and optionally one whole-video distribution.  Fusion folds
these together with biased conflation in a fixed, declarative order:

1. ``frame_cross``  — per key frame, fold across modalities;
2. ``self``         — fold the per-frame results along time;
3. ``video_cross``  — fold the whole-video distributions across modalities;
4. ``reconcile``    — fold the frame-level and video-level consensus.

The stage list and the modality fold order live in a :class:`FusionPlan`,
so alternative arrangements are a configuration change, not a code
change.  Missing levels degrade gracefully: a bundle with only one of
the two levels skips the stages that need the other.  Because biased
conflation is not associative, fold order is part of the contract —
modalities fold in declared order, frames in temporal order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conflation import ProbDist, biased_conflate

__all__ = [
    "FUSION_STAGES",
    "FusionPlan",
    "FusionTrace",
    "PredictionBundle",
    "cross_fuse",
    "self_fuse",
    "multi_tier_fuse",
    "predict_class",
    "ClassStats",
    "AccuracyReport",
    "evaluate_accuracy",
]

#: Recognized stage names, in their canonical order.
FUSION_STAGES = ("frame_cross", "self", "video_cross", "reconcile")


@dataclass(frozen=True)
class FusionPlan:
    """Declarative fusion recipe: modality fold order plus stage list.

    ``modalities`` fixes the order modality distributions fold in; an
    empty tuple means "use the bundle's own declared order".  ``stages``
    is the ordered stage subset to execute, subject to: no duplicates,
    ``self`` requires ``frame_cross`` before it, and ``reconcile`` (when
    present) comes last.
    """

    modalities: tuple[str, ...] = ()
    stages: tuple[str, ...] = FUSION_STAGES

    def __post_init__(self) -> None:
        for s in self.stages:
            if s not in FUSION_STAGES:
                raise ValueError(
                    f"unknown fusion stage {s!r}; expected one of {FUSION_STAGES}")
        if len(set(self.stages)) != len(self.stages):
            raise ValueError(f"duplicate fusion stages in {self.stages}")
        if "self" in self.stages:
            if "frame_cross" not in self.stages or \
                    self.stages.index("frame_cross") > self.stages.index("self"):
                raise ValueError("'self' stage requires 'frame_cross' before it")
        if "reconcile" in self.stages and self.stages[-1] != "reconcile":
            raise ValueError("'reconcile' must be the final stage")
        if len(set(self.modalities)) != len(self.modalities):
            raise ValueError(f"duplicate modalities in {self.modalities}")


@dataclass
class FusionTrace:
    """Counts of pairwise folds per stage, for tests and diagnostics."""

    cross_pair_folds: int = 0
    self_pair_folds: int = 0
    reconcile_folds: int = 0


@dataclass(frozen=True)
class PredictionBundle:
    """All classifier outputs for one video.

    ``modalities`` is the declared fold order.  ``frame_preds`` maps a
    modality to its per-key-frame distributions as ``(frame_index, dist)``
    pairs sorted by frame index; every modality that has any must list
    the same frame indices.  ``video_preds`` maps a modality to its
    whole-video distribution.  All distributions share one label count.
    """

    video_id: str
    modalities: tuple[str, ...]
    frame_preds: dict[str, tuple[tuple[int, ProbDist], ...]] = field(default_factory=dict)
    video_preds: dict[str, ProbDist] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.video_id:
            raise ValueError("video_id must be non-empty")
        if len(set(self.modalities)) != len(self.modalities):
            raise ValueError(f"duplicate modalities in {self.modalities}")
        known = set(self.modalities)
        for name, preds in list(self.frame_preds.items()) + list(self.video_preds.items()):
            if name not in known:
                raise ValueError(
                    f"predictions for undeclared modality {name!r} "
                    f"(declared: {sorted(known)})")
        index_sets = {m: tuple(k for k, _ in preds)
                      for m, preds in self.frame_preds.items() if preds}
        for m, idx in index_sets.items():
            if list(idx) != sorted(idx):
                raise ValueError(f"frame predictions for {m!r} not sorted by frame index")
            if len(set(idx)) != len(idx):
                raise ValueError(f"duplicate frame indices for modality {m!r}")
        distinct = set(index_sets.values())
        if len(distinct) > 1:
            raise ValueError(
                f"modalities disagree on key-frame indices: {sorted(index_sets.items())}")
        sizes = {d.num_labels for _, preds in self.frame_preds.items() for _, d in preds}
        sizes |= {d.num_labels for d in self.video_preds.values()}
        if len(sizes) > 1:
            raise ValueError(f"label-count mismatch across distributions: {sorted(sizes)}")

    @property
    def frame_indices(self) -> tuple[int, ...]:
        for preds in self.frame_preds.values():
            if preds:
                return tuple(k for k, _ in preds)
        return ()

    def has_frame_level(self) -> bool:
        return any(len(p) > 0 for p in self.frame_preds.values())

    def has_video_level(self) -> bool:
        return len(self.video_preds) > 0


def _fold(dists: list[ProbDist], trace: FusionTrace | None, counter: str) -> ProbDist:
    acc = dists[0]
    for nxt in dists[1:]:
        acc = biased_conflate(acc, nxt)
        if trace is not None:
            setattr(trace, counter, getattr(trace, counter) + 1)
    return acc


def cross_fuse(dists: list[ProbDist], trace: FusionTrace | None = None) -> ProbDist:
    """Fold distributions from different modalities, in the given order.

    A single-element list returns its element unchanged; an empty list is
    an error.
    """
    if len(dists) == 0:
        raise ValueError("cross_fuse needs at least one distribution")
    return _fold(dists, trace, "cross_pair_folds")


def self_fuse(dists: list[ProbDist], trace: FusionTrace | None = None) -> ProbDist:
    """Fold one modality's distributions along key-frame order."""
    if len(dists) == 0:
        raise ValueError("self_fuse needs at least one distribution")
    return _fold(dists, trace, "self_pair_folds")


def _modality_order(bundle: PredictionBundle, plan: FusionPlan) -> tuple[str, ...]:
    if not plan.modalities:
        return bundle.modalities
    extra = [m for m in bundle.modalities
             if m not in plan.modalities and (m in bundle.frame_preds or m in bundle.video_preds)]
    if extra:
        raise ValueError(
            f"bundle {bundle.video_id!r} carries modalities {extra} "
            f"absent from the fusion plan {list(plan.modalities)}")
    return plan.modalities


def multi_tier_fuse(bundle: PredictionBundle, plan: FusionPlan | None = None,
                    trace: FusionTrace | None = None) -> ProbDist:
    """Run the staged fusion over one bundle and return the final consensus.

    With the default plan: per-frame cross-modality folds, a temporal
    self fold of those, a cross-modality fold of the whole-video
    distributions, and a final reconciliation of the two consensus
    distributions.  A bundle missing one level yields the other level's
    consensus; a bundle with neither level is an error.
    """
    if plan is None:
        plan = FusionPlan()
    if not bundle.has_frame_level() and not bundle.has_video_level():
        raise ValueError(f"bundle {bundle.video_id!r} has no predictions to fuse")

    order = _modality_order(bundle, plan)
    fused_frames: list[ProbDist] | None = None
    v_frames: ProbDist | None = None
    v_video: ProbDist | None = None

    for stage in plan.stages:
        if stage == "frame_cross" and bundle.has_frame_level():
            # all modalities with frame predictions share one sorted index
            # tuple (validated at construction), so positions align
            mods = [m for m in order if bundle.frame_preds.get(m)]
            fused_frames = [
                cross_fuse([bundle.frame_preds[m][pos][1] for m in mods], trace)
                for pos in range(len(bundle.frame_indices))
            ]
        elif stage == "self" and fused_frames is not None:
            v_frames = self_fuse(fused_frames, trace)
        elif stage == "video_cross" and bundle.has_video_level():
            row = [bundle.video_preds[m] for m in order if m in bundle.video_preds]
            v_video = cross_fuse(row, trace)
        elif stage == "reconcile":
            if v_frames is not None and v_video is not None:
                result = biased_conflate(v_frames, v_video)
                if trace is not None:
                    trace.reconcile_folds += 1
                return result

    remaining = [d for d in (v_frames, v_video) if d is not None]
    if len(remaining) == 1:
        return remaining[0]
    if len(remaining) == 0:
        raise ValueError(
            f"fusion plan {list(plan.stages)} produced no video-level consensus "
            f"for bundle {bundle.video_id!r}")
    raise ValueError(
        f"fusion plan {list(plan.stages)} left two video-level results "
        f"unreconciled for bundle {bundle.video_id!r}")


def predict_class(dist: ProbDist) -> int:
    """Most probable label index; ties go to the lowest index."""
    return int(np.argmax(dist.probs))


@dataclass(frozen=True)
class ClassStats:
    """Ground-truth support and correct-prediction count for one class."""

    class_id: int
    support: int
    correct: int

    @property
    def recall(self) -> float:
        return 100.0 * self.correct / self.support


@dataclass(frozen=True)
class AccuracyReport:
    """Overall and class-balanced accuracy, both in percent."""

    overall_acc: float
    macro_acc: float
    per_class: tuple[ClassStats, ...]


def evaluate_accuracy(pairs: list[tuple[int, int]]) -> AccuracyReport:
    """Score (predicted, true) label pairs.

    ``overall_acc`` is the plain fraction correct; ``macro_acc`` averages
    per-class recall over the classes that actually occur in the ground
    truth, weighting rare and common classes equally.
    """
    if len(pairs) == 0:
        raise ValueError("cannot evaluate an empty prediction list")
    support: dict[int, int] = {}
    correct: dict[int, int] = {}
    hits = 0
    for pred, true in pairs:
        support[true] = support.get(true, 0) + 1
        if pred == true:
            correct[true] = correct.get(true, 0) + 1
            hits += 1
    stats = tuple(
        ClassStats(class_id=c, support=support[c], correct=correct.get(c, 0))
        for c in sorted(support)
    )
    overall = 100.0 * hits / len(pairs)
    macro = float(np.mean([s.recall for s in stats]))
    return AccuracyReport(overall_acc=overall, macro_acc=macro, per_class=stats)
