"""Combining discrete probability distributions into a single consensus.

The central operation is *conflation*: the normalized element-wise product
of two distributions over the same label set.  Conflation rewards labels
that both inputs consider likely, which lets two individually-wrong
distributions promote a shared runner-up to the top rank.

On top of plain conflation this module provides a *biased* variant that
pulls the consensus toward whichever input it already resembles most,
measured by the Bhattacharyya distance.  The bias guards against one
confidently-wrong input dragging the consensus away from a trustworthy
one.

All operations smooth their inputs by adding a tiny epsilon and
renormalizing before use, so zero entries never produce infinities.  The
smoothing is applied to local copies only; caller-owned distributions are
never mutated.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "SMOOTHING_EPS",
    "ProbDist",
    "conflate",
    "bhattacharyya_distance",
    "biased_conflate",
]

#: Epsilon added to every probability before an operation uses it.
SMOOTHING_EPS = 1e-12

#: Two distances closer than this are treated as an exact tie (no bias).
_TIE_TOL = 1e-12

#: Accepted deviation of a distribution's sum from 1.
_SUM_TOL = 1e-9


class ProbDist:
    """A finite discrete probability distribution over ``L >= 2`` labels.

    Wraps a read-only float64 vector whose entries are non-negative,
    finite, and sum to 1 within a small tolerance.  Instances are
    immutable; operations return new instances.
    """

    __slots__ = ("_probs",)

    def __init__(self, probs: Iterable[float]) -> None:
        arr = np.asarray(list(probs) if not isinstance(probs, np.ndarray) else probs,
                         dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"probability vector must be 1-D, got shape {arr.shape}")
        if arr.size < 2:
            raise ValueError(f"need at least 2 labels, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("probability vector contains non-finite entries")
        if np.any(arr < 0.0):
            raise ValueError("probability vector contains negative entries")
        total = float(arr.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities must sum to 1 within {_SUM_TOL}, got {total!r}")
        arr = arr.copy()
        arr.flags.writeable = False
        self._probs = arr

    @property
    def probs(self) -> np.ndarray:
        """The underlying read-only probability vector."""
        return self._probs

    @property
    def num_labels(self) -> int:
        return int(self._probs.size)

    @classmethod
    def uniform(cls, num_labels: int) -> "ProbDist":
        if num_labels < 2:
            raise ValueError(f"need at least 2 labels, got {num_labels}")
        return cls(np.full(num_labels, 1.0 / num_labels))

    @classmethod
    def from_weights(cls, weights: Iterable[float]) -> "ProbDist":
        """Normalize an arbitrary non-negative weight vector into a distribution."""
        arr = np.asarray(list(weights), dtype=np.float64)
        total = arr.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise ValueError("weights must be non-negative with a positive sum")
        return cls(arr / total)

    def __len__(self) -> int:
        return int(self._probs.size)

    def __getitem__(self, idx: int) -> float:
        return float(self._probs[idx])

    def __iter__(self):
        return iter(self._probs.tolist())

    def __repr__(self) -> str:
        body = ", ".join(f"{p:.6g}" for p in self._probs)
        return f"ProbDist([{body}])"

    def allclose(self, other: "ProbDist", tol: float = 1e-12) -> bool:
        return (self.num_labels == other.num_labels
                and bool(np.all(np.abs(self._probs - other._probs) <= tol)))


def _check_same_length(p1: ProbDist, p2: ProbDist) -> None:
    if p1.num_labels != p2.num_labels:
        raise ValueError(
            f"label-count mismatch: {p1.num_labels} vs {p2.num_labels}")


def _smoothed(p: ProbDist) -> np.ndarray:
    """Epsilon-smoothed copy of ``p``'s vector (never stored back)."""
    q = p.probs + SMOOTHING_EPS
    return q / q.sum()


def conflate(p1: ProbDist, p2: ProbDist) -> ProbDist:
    """Normalized element-wise product of two distributions.

    Commutative, and the uniform distribution is its identity.  Both
    inputs are epsilon-smoothed first, so a zero in one input damps a
    label rather than annihilating it outright.
    """
    _check_same_length(p1, p2)
    prod = _smoothed(p1) * _smoothed(p2)
    return ProbDist(prod / prod.sum())


def bhattacharyya_distance(p1: ProbDist, p2: ProbDist) -> float:
    """Bhattacharyya distance ``-ln sum_i sqrt(p_i * q_i)`` between two
    distributions.

    Computed on epsilon-smoothed copies, so disjoint supports yield a
    large but finite value instead of infinity.  Symmetric, non-negative,
    and zero for identical inputs.
    """
    _check_same_length(p1, p2)
    bc = float(np.sqrt(_smoothed(p1) * _smoothed(p2)).sum())
    if bc >= 1.0:  # float round-off can nudge the coefficient past 1
        return 0.0
    return -math.log(bc)


def biased_conflate(p1: ProbDist, p2: ProbDist) -> ProbDist:
    """Conflation pulled toward the input it already agrees with.

    Computes ``Pc = conflate(p1, p2)``, measures the Bhattacharyya
    distance from ``Pc`` to each input, and blends ``Pc`` with the nearer
    input::

        beta   = (d_far - d_near) / (d_far + d_near)
        result = normalize((1 - beta) * Pc + beta * P_near)

    When the two distances tie (within 1e-12) or are both zero, no bias is
    applied and the result is plain conflation.  Conflating a distribution
    with the uniform distribution returns that distribution fully intact,
    because ``Pc`` then equals it exactly.
    """
    _check_same_length(p1, p2)
    pc = conflate(p1, p2)
    d1 = bhattacharyya_distance(pc, p1)
    d2 = bhattacharyya_distance(pc, p2)
    total = d1 + d2
    if total <= 0.0 or abs(d1 - d2) <= _TIE_TOL:
        return pc
    if d1 <= d2:
        near, d_near, d_far = p1, d1, d2
    else:
        near, d_near, d_far = p2, d2, d1
    beta = (d_far - d_near) / total
    mixed = (1.0 - beta) * pc.probs + beta * near.probs
    return ProbDist(mixed / mixed.sum())


def fold_conflate(dists: Sequence[ProbDist]) -> ProbDist:
    """Left fold of :func:`biased_conflate` over a non-empty sequence.

    A single-element sequence is returned unchanged (same object).  The
    fold is order-sensitive: biased conflation is not associative.
    """
    if len(dists) == 0:
        raise ValueError("cannot fold an empty sequence of distributions")
    acc = dists[0]
    for nxt in dists[1:]:
        acc = biased_conflate(acc, nxt)
    return acc
