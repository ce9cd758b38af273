"""Slow/fast frame classification from patch-based inter-frame similarity.

A video is reduced to a sequence of anchor ("slow") frames and cheap
("fast") follow-up frames.  Frame 0 is always slow.  Every later frame is
compared against the most recent slow frame on a coarse grid of mean patch
colors; if the unchanged fraction exceeds the threshold the frame is fast,
otherwise it becomes the new slow anchor.

Similarity is computed on mean colors of a ``grid_side`` x ``grid_side``
partition of each frame.  Cell means use exact fractional-pixel area
weighting over the original pixels, which is equivalent to area-averaged
resampling to any common comparison size whose dimensions are multiples of
``grid_side``.  Frames of differing resolutions therefore compare in the
same normalized cell space.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError
from .parallel import map_ordered

DEFAULT_GRID_SIDE = 8
DEFAULT_PER_PATCH_TOL = 0.05
DEFAULT_SLOW_THRESHOLD = 0.95


class FrameKind(Enum):
    SLOW = "slow"
    FAST = "fast"


@dataclass(frozen=True)
class FrameRecord:
    """One decoded video frame: row-major RGB bytes plus timing and size."""

    index: int
    timestamp_s: float
    width_px: int
    height_px: int
    pixels: bytes

    def __post_init__(self):
        if self.index < 0:
            raise InvalidInputError(f"frame index must be >= 0, got {self.index}")
        if not (math.isfinite(self.timestamp_s) and self.timestamp_s >= 0):
            raise InvalidInputError(
                f"frame timestamp must be a finite non-negative number of "
                f"seconds, got {self.timestamp_s!r}"
            )
        if self.width_px < 1 or self.height_px < 1:
            raise InvalidInputError(
                f"zero-sized frame: {self.width_px}x{self.height_px}"
            )
        expected = self.width_px * self.height_px * 3
        if len(self.pixels) != expected:
            raise InvalidInputError(
                f"frame {self.index}: pixel buffer holds {len(self.pixels)} "
                f"bytes, expected {expected} for "
                f"{self.width_px}x{self.height_px} RGB"
            )

    def as_array(self) -> np.ndarray:
        """Pixels as a read-only (height, width, 3) uint8 array."""
        arr = np.frombuffer(self.pixels, dtype=np.uint8)
        return arr.reshape(self.height_px, self.width_px, 3)


@dataclass(frozen=True)
class SimilarityReport:
    """Unchanged-patch fraction from comparing one frame against an anchor."""

    anchor_index: int
    target_index: int
    grid_side: int
    unchanged_fraction: float

    def __post_init__(self):
        if not 0.0 <= self.unchanged_fraction <= 1.0:
            raise InvalidInputError(
                f"unchanged_fraction must lie in [0, 1], "
                f"got {self.unchanged_fraction}"
            )


@dataclass(frozen=True)
class FrameClass:
    """Classification of one frame; slow frames anchor themselves."""

    index: int
    kind: FrameKind
    anchor_index: int


def _span_means(values: np.ndarray, cells: int) -> np.ndarray:
    """Means of ``cells`` equal spans along axis 0 with exact edge weighting.

    Boundary pixels that straddle a span edge contribute proportionally to
    the overlap, so the result matches continuous box integration of the
    piecewise-constant image.
    """
    n = values.shape[0]
    integral = np.zeros((n + 1,) + values.shape[1:], dtype=np.float64)
    np.cumsum(values, axis=0, out=integral[1:])
    edges = np.arange(cells + 1, dtype=np.float64) * (n / cells)
    edges[-1] = float(n)
    whole = np.floor(edges).astype(np.int64)
    np.clip(whole, 0, n, out=whole)
    frac = edges - whole
    frac = frac.reshape((-1,) + (1,) * (values.ndim - 1))
    at_edges = integral[whole] + frac * values[np.minimum(whole, n - 1)]
    return (at_edges[1:] - at_edges[:-1]) * (cells / n)


def _cell_means(frame: FrameRecord, grid_side: int) -> np.ndarray:
    """Mean color of each grid cell, channels normalized to [0, 1]."""
    img = frame.as_array().astype(np.float64) / 255.0
    by_rows = _span_means(img, grid_side)
    by_cols = _span_means(by_rows.transpose(1, 0, 2), grid_side)
    return by_cols.transpose(1, 0, 2)


def _unchanged_fraction(
    means_a: np.ndarray, means_b: np.ndarray, per_patch_tol: float
) -> float:
    diff = np.mean(np.abs(means_a - means_b), axis=2)
    # Exact equality always counts as unchanged so that self-similarity is
    # 1.0 even under per_patch_tol == 0.
    unchanged = (diff < per_patch_tol) | (diff == 0.0)
    return int(np.count_nonzero(unchanged)) / diff.size


def _validate_similarity_params(grid_side: int, per_patch_tol: float) -> None:
    try:
        grid_side = operator.index(grid_side)
    except TypeError:
        raise InvalidInputError(
            f"grid_side must be an integer >= 1, got {grid_side!r}"
        ) from None
    if grid_side < 1:
        raise InvalidInputError(f"grid_side must be an integer >= 1, got {grid_side!r}")
    if not (math.isfinite(per_patch_tol) and per_patch_tol >= 0):
        raise InvalidInputError(
            f"per_patch_tol must be a finite number >= 0, got {per_patch_tol!r}"
        )


def patch_similarity(
    a: FrameRecord,
    b: FrameRecord,
    grid_side: int = DEFAULT_GRID_SIDE,
    per_patch_tol: float = DEFAULT_PER_PATCH_TOL,
) -> SimilarityReport:
    """Fraction of grid cells whose mean color matches within tolerance.

    A cell counts as unchanged when the mean absolute per-channel difference
    of its mean color (normalized to [0, 1]) is below ``per_patch_tol``.
    Symmetric in its two frames; comparing a frame with itself yields 1.0.
    """
    _validate_similarity_params(grid_side, per_patch_tol)
    fraction = _unchanged_fraction(
        _cell_means(a, grid_side), _cell_means(b, grid_side), per_patch_tol
    )
    return SimilarityReport(
        anchor_index=a.index,
        target_index=b.index,
        grid_side=grid_side,
        unchanged_fraction=fraction,
    )


def _validate_frame_sequence(frames: Sequence[FrameRecord]) -> None:
    if not frames:
        raise InvalidInputError("no frames")
    for prev, cur in zip(frames, frames[1:]):
        if cur.index <= prev.index:
            raise InvalidInputError(
                f"frame indices must strictly increase: "
                f"{prev.index} then {cur.index}"
            )
        if cur.timestamp_s <= prev.timestamp_s:
            raise InvalidInputError(
                f"frame timestamps must strictly increase: "
                f"{prev.timestamp_s} then {cur.timestamp_s}"
            )


def classify_frames_detailed(
    frames: Iterable[FrameRecord],
    threshold: float = DEFAULT_SLOW_THRESHOLD,
    grid_side: int = DEFAULT_GRID_SIDE,
    per_patch_tol: float = DEFAULT_PER_PATCH_TOL,
) -> tuple[list[FrameClass], list[SimilarityReport]]:
    """Classify frames and return the similarity report for each comparison.

    Frame 0 is always slow.  Each later frame is compared against the most
    recent slow frame: an unchanged fraction strictly above ``threshold``
    marks it fast, anything else starts a new slow anchor.  One report is
    produced per frame after the first, in input order.
    """
    seq = list(frames)
    _validate_frame_sequence(seq)
    _validate_similarity_params(grid_side, per_patch_tol)
    if not math.isfinite(threshold):
        raise InvalidInputError(f"threshold must be finite, got {threshold!r}")

    # Per-frame cell means are independent, so they may be computed in
    # parallel; the sequential anchor walk below uses the ordered results.
    means = map_ordered(lambda f: _cell_means(f, grid_side), seq)

    classes = [FrameClass(seq[0].index, FrameKind.SLOW, seq[0].index)]
    reports: list[SimilarityReport] = []
    anchor_pos = 0
    for pos in range(1, len(seq)):
        fraction = _unchanged_fraction(means[anchor_pos], means[pos], per_patch_tol)
        reports.append(
            SimilarityReport(
                anchor_index=seq[anchor_pos].index,
                target_index=seq[pos].index,
                grid_side=grid_side,
                unchanged_fraction=fraction,
            )
        )
        if fraction > threshold:
            classes.append(
                FrameClass(seq[pos].index, FrameKind.FAST, seq[anchor_pos].index)
            )
        else:
            classes.append(FrameClass(seq[pos].index, FrameKind.SLOW, seq[pos].index))
            anchor_pos = pos
    return classes, reports


def classify_frames(
    frames: Iterable[FrameRecord],
    threshold: float = DEFAULT_SLOW_THRESHOLD,
    grid_side: int = DEFAULT_GRID_SIDE,
    per_patch_tol: float = DEFAULT_PER_PATCH_TOL,
) -> list[FrameClass]:
    """Classify each frame as slow or fast against the latest slow anchor."""
    classes, _ = classify_frames_detailed(frames, threshold, grid_side, per_patch_tol)
    return classes
