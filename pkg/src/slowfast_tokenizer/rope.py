"""Position encodings for variable-resolution inputs.

Three pieces, all emitting numbers rather than applying them to a model:

* bilinear interpolation of a learned absolute position grid onto an
  arbitrary target grid (corner-aligned, exact identity at source size);
* 2D rotary angles for patch positions, with the head's rotation pairs
  split between the row and column axes;
* 3D (temporal, height, width) rotary index tables for a mixed
  text/image/video token layout.

Index-table rules: text and special tokens take the shared scalar cursor on
all three axes and advance it by one.  Vision blocks of one video share the
cursor value captured at the video's first block as their origin; a frame's
temporal index is that origin plus its timestamp in ``temporal_unit_s``
units (rounded half-up), while height/width enumerate the patch grid from
the same origin.  Standalone image blocks (``kind=None``) each take their
own origin at the current cursor.  After a vision block the cursor moves
past the block's largest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidConfigError, InvalidInputError
from .layout import SpecialToken, TimestampText, TokenLayout, VisionBlock

DEFAULT_INV_FREQ_BASE = 1_000_000.0
LONG_CONTEXT_INV_FREQ_BASE = 8_000_000.0


@dataclass(frozen=True, eq=False)
class PosEmbedGrid:
    """A learned square grid of absolute position embeddings."""

    side: int
    dim: int
    values: np.ndarray

    def __post_init__(self):
        if self.side < 2:
            raise InvalidInputError(f"grid side must be >= 2, got {self.side}")
        if self.dim < 1:
            raise InvalidInputError(f"embedding dim must be >= 1, got {self.dim}")
        expected = (self.side, self.side, self.dim)
        if self.values.shape != expected:
            raise InvalidInputError(
                f"values shape {self.values.shape} does not match {expected}"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("position embedding values must be finite")

    @classmethod
    def from_array(cls, values: np.ndarray) -> "PosEmbedGrid":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 3 or values.shape[0] != values.shape[1]:
            raise InvalidInputError(
                f"expected a (side, side, dim) array, got shape {values.shape}"
            )
        return cls(side=values.shape[0], dim=values.shape[2], values=values)


def _sample_coords(n_out: int, n_src: int) -> np.ndarray:
    # Corner-aligned sampling; a single output row/col samples the origin.
    if n_out == 1:
        return np.zeros(1, dtype=np.float64)
    return np.arange(n_out, dtype=np.float64) * ((n_src - 1) / (n_out - 1))


def interpolate_pos_embed(src: PosEmbedGrid, rows: int, cols: int) -> np.ndarray:
    """Bilinearly resample the source grid onto a rows x cols grid.

    Corner-aligned: resampling at the source size reproduces it exactly,
    and every output is a convex combination of source values.
    """
    if rows < 1 or cols < 1:
        raise InvalidInputError(f"target grid must be >= 1x1, got {rows}x{cols}")
    ys = _sample_coords(rows, src.side)
    xs = _sample_coords(cols, src.side)
    y0 = np.minimum(ys.astype(np.int64), src.side - 2)
    x0 = np.minimum(xs.astype(np.int64), src.side - 2)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    v = src.values
    v00 = v[y0[:, None], x0[None, :]]
    v01 = v[y0[:, None], x0[None, :] + 1]
    v10 = v[y0[:, None] + 1, x0[None, :]]
    v11 = v[y0[:, None] + 1, x0[None, :] + 1]
    top = v00 * (1.0 - fx) + v01 * fx
    bottom = v10 * (1.0 - fx) + v11 * fx
    return top * (1.0 - fy) + bottom * fy


@dataclass(frozen=True)
class RopeConfig:
    """Rotary head geometry: pair counts per axis and the frequency base."""

    head_dim: int
    inv_freq_base: float = DEFAULT_INV_FREQ_BASE
    axis_split: tuple[int, ...] = ()

    def __post_init__(self):
        if self.head_dim % 2 != 0 or self.head_dim < 2:
            raise InvalidConfigError(
                f"head_dim must be a positive even number, got {self.head_dim}"
            )
        if not (math.isfinite(self.inv_freq_base) and self.inv_freq_base > 1):
            raise InvalidConfigError(
                f"inv_freq_base must be > 1, got {self.inv_freq_base!r}"
            )
        if not self.axis_split or any(p < 1 for p in self.axis_split):
            raise InvalidConfigError(
                f"axis_split must be non-empty positive counts, got {self.axis_split}"
            )
        if sum(self.axis_split) != self.head_dim // 2:
            raise InvalidConfigError(
                f"axis_split {self.axis_split} must sum to head_dim/2 = "
                f"{self.head_dim // 2}"
            )

    @classmethod
    def split_evenly(
        cls, head_dim: int, n_axes: int = 2, inv_freq_base: float = DEFAULT_INV_FREQ_BASE
    ) -> "RopeConfig":
        """Equal rotation-pair split; the head must divide evenly."""
        if head_dim % 2 != 0 or (head_dim // 2) % n_axes != 0:
            raise InvalidConfigError(
                f"head_dim {head_dim} cannot split its {head_dim // 2} pairs "
                f"evenly across {n_axes} axes"
            )
        part = head_dim // 2 // n_axes
        return cls(head_dim, inv_freq_base, tuple([part] * n_axes))


def axis_frequencies(n_pairs: int, inv_freq_base: float) -> np.ndarray:
    """Frequency of pair k out of P: ``inv_freq_base ** (-k / P)``."""
    if n_pairs < 1:
        raise InvalidConfigError(f"need at least one pair, got {n_pairs}")
    k = np.arange(n_pairs, dtype=np.float64)
    return inv_freq_base ** (-k / n_pairs)


def rope_angles_2d(row: float, col: float, cfg: RopeConfig) -> np.ndarray:
    """Rotation angles for a patch at (row, col): position times frequency.

    The first ``axis_split[0]`` pairs rotate with the row position, the
    remaining ``axis_split[1]`` with the column position.
    """
    if len(cfg.axis_split) != 2:
        raise InvalidConfigError(
            f"2D angles need a 2-part axis_split, got {cfg.axis_split}"
        )
    return np.concatenate(
        [
            row * axis_frequencies(cfg.axis_split[0], cfg.inv_freq_base),
            col * axis_frequencies(cfg.axis_split[1], cfg.inv_freq_base),
        ]
    )


def apply_rotary(vec: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Rotate consecutive feature pairs by the given angles.

    Reference routine for property checks only; pair i is
    ``(vec[2i], vec[2i+1])``.
    """
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != 2 * len(angles):
        raise InvalidInputError(
            f"vector length {vec.shape} does not match {2 * len(angles)} "
            f"for {len(angles)} angles"
        )
    cos, sin = np.cos(angles), np.sin(angles)
    out = np.empty_like(vec)
    out[0::2] = vec[0::2] * cos - vec[1::2] * sin
    out[1::2] = vec[0::2] * sin + vec[1::2] * cos
    return out


@dataclass(frozen=True, eq=False)
class RopeIndexTable:
    """Per-token (temporal, height, width) rotary position indices."""

    indices: np.ndarray  # (n_tokens, 3) int64

    def __post_init__(self):
        if self.indices.ndim != 2 or self.indices.shape[1] != 3:
            raise InvalidInputError(
                f"indices must have shape (n, 3), got {self.indices.shape}"
            )

    def __len__(self) -> int:
        return self.indices.shape[0]

    def to_lists(self) -> list[list[int]]:
        return [[int(t), int(h), int(w)] for t, h, w in self.indices]


def build_rope_index_table(
    layout: TokenLayout,
    frame_timestamps: Optional[Sequence[float]] = None,
    temporal_unit_s: float = 1.0,
) -> RopeIndexTable:
    """Assign (temporal, height, width) indices to every layout token.

    Pure-text layouts degenerate to standard 1D positions with all three
    axes equal.  See the module docstring for the vision-block rules.
    """
    if not (math.isfinite(temporal_unit_s) and temporal_unit_s > 0):
        raise InvalidInputError(
            f"temporal_unit_s must be a finite positive number, "
            f"got {temporal_unit_s!r}"
        )
    parts: list[np.ndarray] = []
    cursor = 0
    video_origin: Optional[int] = None
    for el in layout.elements:
        if isinstance(el, (SpecialToken, TimestampText)):
            parts.append(np.array([[cursor, cursor, cursor]], dtype=np.int64))
            cursor += 1
        elif isinstance(el, VisionBlock):
            if el.kind is None:
                origin = cursor
            else:
                if video_origin is None:
                    video_origin = cursor
                origin = video_origin
            t_offset = 0
            if frame_timestamps is not None:
                try:
                    seconds = frame_timestamps[el.frame_index]
                except IndexError:
                    raise InvalidInputError(
                        f"vision block references frame {el.frame_index} but "
                        f"only {len(frame_timestamps)} timestamps were given"
                    ) from None
                t_offset = math.floor(seconds / temporal_unit_s + 0.5)
            rows, cols = el.grid.rows, el.grid.cols
            t_idx = origin + t_offset
            block = np.empty((rows * cols, 3), dtype=np.int64)
            block[:, 0] = t_idx
            block[:, 1] = origin + np.repeat(np.arange(rows), cols)
            block[:, 2] = origin + np.tile(np.arange(cols), rows)
            parts.append(block)
            block_max = max(t_idx, origin + rows - 1, origin + cols - 1)
            cursor = max(cursor, block_max + 1)
        else:
            raise InvalidInputError(
                f"unknown layout element kind: {type(el).__name__}"
            )
    if parts:
        indices = np.concatenate(parts, axis=0)
    else:
        indices = np.zeros((0, 3), dtype=np.int64)
    return RopeIndexTable(indices)
