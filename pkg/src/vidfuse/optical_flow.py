"""Dense optical flow between consecutive grayscale frames.

Implements the classic global variational estimator: brightness constancy
plus a quadratic smoothness penalty, solved by Jacobi-style sweeps of the
coupled update

    d = (Ex*u_avg + Ey*v_avg + Et) / (alpha^2 + Ex^2 + Ey^2)
    u = u_avg - Ex*d
    v = v_avg - Ey*d

where ``u_avg``/``v_avg`` are weighted 8-neighbor local averages of the
current flow estimate.

Derivatives come from the standard 2x2x2 finite-difference stencil over
the two-frame cube.  The stencil is evaluated on cell centers of the
edge-replicated frames and averaged back to pixel centers, which keeps
the discretization exactly equivariant under 180-degree rotation of the
inputs (rotating both frames rotates and negates the flow field).

Intensities are used at their native 0..255 scale; ``alpha`` is expressed
in those units.  Both flow components are measured in pixels per frame,
positive ``u`` pointing right and positive ``v`` pointing down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

__all__ = [
    "Frame",
    "FlowParams",
    "FlowField",
    "compute_dense_flow",
    "magnitude_image",
]

#: Weighted 8-neighbor averaging kernel for the smoothness term
#: (edge neighbors 1/6, corner neighbors 1/12, center excluded).
NEIGHBOR_KERNEL = np.array(
    [
        [1.0 / 12.0, 1.0 / 6.0, 1.0 / 12.0],
        [1.0 / 6.0, 0.0, 1.0 / 6.0],
        [1.0 / 12.0, 1.0 / 6.0, 1.0 / 12.0],
    ]
)


@dataclass(frozen=True)
class Frame:
    """A single grayscale video frame.

    ``pixels`` holds intensities in [0, 255] (any real dtype); ``index``
    is the frame's 1-based position within its video.
    """

    pixels: np.ndarray
    index: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValueError(f"frame pixels must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ValueError(f"frame must be at least 2x2, got {arr.shape}")
        if not np.all(np.isfinite(arr.astype(np.float64))):
            raise ValueError("frame contains non-finite intensities")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < 0.0 or hi > 255.0:
            raise ValueError(f"intensities must lie in [0, 255], got [{lo}, {hi}]")
        if self.index < 1:
            raise ValueError(f"frame index must be >= 1, got {self.index}")
        object.__setattr__(self, "pixels", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class FlowParams:
    """Solver parameters.

    ``alpha`` is the smoothness weight (> 0), ``iterations`` the maximum
    number of sweeps (>= 1), and ``epsilon`` an early-stop threshold on
    the mean squared per-pixel update (>= 0; 0 disables early stopping).
    """

    alpha: float = 1.0
    iterations: int = 100
    epsilon: float = 1e-4

    def __post_init__(self) -> None:
        if not (self.alpha > 0.0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a positive finite real, got {self.alpha}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not (self.epsilon >= 0.0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be >= 0 and finite, got {self.epsilon}")


@dataclass(frozen=True)
class FlowField:
    """Per-pixel displacement field between two frames of equal shape.

    ``u`` is the horizontal component, ``v`` the vertical one, both
    float64 arrays shaped like the input frames.  ``frame_index`` records
    the 1-based index of the earlier frame of the pair.
    """

    u: np.ndarray
    v: np.ndarray
    frame_index: int = field(default=1)

    def __post_init__(self) -> None:
        if self.u.shape != self.v.shape:
            raise ValueError(f"u/v shape mismatch: {self.u.shape} vs {self.v.shape}")
        if self.u.ndim != 2:
            raise ValueError(f"flow components must be 2-D, got shape {self.u.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.u.shape  # type: ignore[return-value]

    def magnitudes(self) -> np.ndarray:
        """Per-pixel Euclidean magnitude ``sqrt(u^2 + v^2)``."""
        return np.hypot(self.u, self.v)


def _cell_derivatives(prev: np.ndarray, nxt: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """2x2x2 stencil derivatives on cell centers of edge-replicated frames."""
    p1 = np.pad(prev, 1, mode="edge")
    p2 = np.pad(nxt, 1, mode="edge")

    def dx(f: np.ndarray) -> np.ndarray:
        return 0.5 * ((f[:-1, 1:] - f[:-1, :-1]) + (f[1:, 1:] - f[1:, :-1]))

    def dy(f: np.ndarray) -> np.ndarray:
        return 0.5 * ((f[1:, :-1] - f[:-1, :-1]) + (f[1:, 1:] - f[:-1, 1:]))

    ex = 0.5 * (dx(p1) + dx(p2))
    ey = 0.5 * (dy(p1) + dy(p2))
    diff = p2 - p1
    et = 0.25 * (diff[:-1, :-1] + diff[:-1, 1:] + diff[1:, :-1] + diff[1:, 1:])
    return ex, ey, et


def _to_pixel_centers(cells: np.ndarray) -> np.ndarray:
    """Average the four cell values surrounding each pixel center."""
    return 0.25 * (cells[:-1, :-1] + cells[:-1, 1:] + cells[1:, :-1] + cells[1:, 1:])


def _neighbor_average(comp: np.ndarray, weight_sums: np.ndarray) -> np.ndarray:
    """Weighted 8-neighbor average, renormalized over in-bounds neighbors."""
    acc = ndimage.correlate(comp, NEIGHBOR_KERNEL, mode="constant", cval=0.0)
    return acc / weight_sums


def compute_dense_flow(prev: Frame, nxt: Frame, params: FlowParams | None = None) -> FlowField:
    """Estimate the dense flow carrying ``prev`` onto ``nxt``.

    Starts from a zero field and runs Jacobi sweeps of the coupled
    update, stopping after ``params.iterations`` sweeps or as soon as the
    mean squared per-pixel update drops below ``params.epsilon``.  The
    computation is deterministic: identical inputs give a bit-identical
    field.

    Raises ``ValueError`` if the frames' shapes differ.
    """
    if params is None:
        params = FlowParams()
    if prev.shape != nxt.shape:
        raise ValueError(
            f"frame shape mismatch: {prev.shape} vs {nxt.shape}")

    a = np.asarray(prev.pixels, dtype=np.float64)
    b = np.asarray(nxt.pixels, dtype=np.float64)

    ex, ey, et = (_to_pixel_centers(c) for c in _cell_derivatives(a, b))
    denom = params.alpha ** 2 + ex ** 2 + ey ** 2
    weight_sums = ndimage.correlate(
        np.ones_like(a), NEIGHBOR_KERNEL, mode="constant", cval=0.0)

    u = np.zeros_like(a)
    v = np.zeros_like(a)
    for _ in range(params.iterations):
        u_avg = _neighbor_average(u, weight_sums)
        v_avg = _neighbor_average(v, weight_sums)
        d = (ex * u_avg + ey * v_avg + et) / denom
        u_next = u_avg - ex * d
        v_next = v_avg - ey * d
        update = float(np.mean((u_next - u) ** 2 + (v_next - v) ** 2))
        u, v = u_next, v_next
        if update < params.epsilon:
            break

    return FlowField(u=u, v=v, frame_index=prev.index)


def magnitude_image(flow: FlowField) -> np.ndarray:
    """Render a flow field as an 8-bit grayscale magnitude image.

    Magnitudes are scaled so the maximum maps to 255 and rounded half
    away from zero.  An all-zero field yields an all-zero image; any
    non-zero field contains at least one pixel of exactly 255.
    """
    mag = flow.magnitudes()
    peak = float(mag.max())
    if peak == 0.0:
        return np.zeros(mag.shape, dtype=np.uint8)
    scaled = mag / peak * 255.0
    # round half away from zero; values are non-negative so floor(x + .5) works
    return np.floor(scaled + 0.5).astype(np.uint8)
