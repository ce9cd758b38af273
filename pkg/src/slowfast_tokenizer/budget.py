"""Token budgets and native-resolution patch grids.

A frame is encoded as ``rows x cols`` merged visual tokens, each covering a
``merge_factor x merge_factor`` block of ``patch_px`` pixel patches, so
resized dimensions are always multiples of ``merge_factor * patch_px``.
``fit_grid`` picks the largest grid that fits a token cap while preserving
aspect ratio; ``solve_video_budget`` binary-searches the per-slow-frame
token count so the whole video fits the total budget, with fast frames held
at ``fast_ratio`` of a slow frame's allocation.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .errors import BudgetTooSmallError, InvalidConfigError, InvalidInputError
from .frames import FrameClass, FrameKind


@dataclass(frozen=True)
class GeometryConfig:
    """Patch geometry and token-budget limits."""

    patch_px: int = 14
    merge_factor: int = 2
    min_tokens_per_frame: int = 4
    max_tokens_per_frame: int = 16_384
    image_token_cap: int = 20_480
    video_token_budget: int = 75_000
    fast_ratio: float = 0.3

    def __post_init__(self):
        if self.patch_px < 1:
            raise InvalidConfigError(f"patch_px must be >= 1, got {self.patch_px}")
        if self.merge_factor < 1:
            raise InvalidConfigError(
                f"merge_factor must be >= 1, got {self.merge_factor}"
            )
        if not (0 < self.fast_ratio <= 1):
            raise InvalidConfigError(
                f"fast_ratio must lie in (0, 1], got {self.fast_ratio}"
            )
        if not (
            1
            <= self.min_tokens_per_frame
            <= self.max_tokens_per_frame
            <= self.video_token_budget
        ):
            raise InvalidConfigError(
                "need 1 <= min_tokens_per_frame <= max_tokens_per_frame "
                f"<= video_token_budget, got {self.min_tokens_per_frame}, "
                f"{self.max_tokens_per_frame}, {self.video_token_budget}"
            )
        if self.image_token_cap < 1:
            raise InvalidConfigError(
                f"image_token_cap must be >= 1, got {self.image_token_cap}"
            )

    @property
    def token_unit_px(self) -> int:
        """Pixel side of one merged token: merge_factor * patch_px."""
        return self.merge_factor * self.patch_px

    def fast_budget(self, tokens_per_slow: int) -> int:
        """floor(fast_ratio * tokens_per_slow) in exact decimal arithmetic.

        ``Fraction(str(...))`` reads the ratio at its decimal face value so
        that e.g. 0.3 * 10 floors to 3, not 2.
        """
        return int(Fraction(str(self.fast_ratio)) * tokens_per_slow)


@dataclass(frozen=True)
class PatchGrid:
    """A valid resized frame geometry: merged-token rows/cols and pixels."""

    rows: int
    cols: int
    resized_h_px: int
    resized_w_px: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidInputError(
                f"grid must be at least 1x1, got {self.rows}x{self.cols}"
            )

    @property
    def tokens(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class BudgetPlan:
    """Solved per-frame token allocation for a whole video."""

    tokens_per_slow: int
    tokens_per_fast: int
    grids: tuple[PatchGrid, ...]
    total_tokens: int

    def __post_init__(self):
        total = sum(g.tokens for g in self.grids)
        if total != self.total_tokens:
            raise InvalidInputError(
                f"total_tokens {self.total_tokens} does not match grid sum {total}"
            )


def fit_grid(
    width_px: int, height_px: int, max_tokens: int, cfg: GeometryConfig
) -> PatchGrid:
    """Largest aspect-preserving grid with at most ``max_tokens`` tokens.

    Candidate grids are those reachable by scaling both dimensions with one
    factor s in (0, 1] and rounding each to the nearest whole token unit
    (at least one per axis); upscaling is never used.  As s shrinks, the
    candidate (rows, cols) pairs form a chain with strictly decreasing
    token counts, so the walk below steps down the chain, undoing the
    rounding breakpoint with the largest s first, until the count fits.
    Breakpoints compare exactly in integer arithmetic:
    s_rows(r) = (2r - 1) * unit / (2 * height), so
    s_rows(r) > s_cols(c)  iff  (2r - 1) * width > (2c - 1) * height.
    """
    if width_px < 1 or height_px < 1:
        raise InvalidInputError(f"zero-sized frame: {width_px}x{height_px}")
    try:
        max_tokens = operator.index(max_tokens)
    except TypeError:
        raise InvalidInputError(
            f"max_tokens must be an integer >= 1, got {max_tokens!r}"
        ) from None
    if max_tokens < 1:
        raise InvalidInputError(f"max_tokens must be an integer >= 1, got {max_tokens!r}")
    unit = cfg.token_unit_px
    # Round-half-up of dim/unit, clamped to one unit minimum.
    rows = max(1, (2 * height_px + unit) // (2 * unit))
    cols = max(1, (2 * width_px + unit) // (2 * unit))
    while rows * cols > max_tokens:
        row_key = (2 * rows - 1) * width_px if rows > 1 else -1
        col_key = (2 * cols - 1) * height_px if cols > 1 else -1
        if row_key > col_key:
            rows -= 1
        elif col_key > row_key:
            cols -= 1
        else:
            # Both axes cross a breakpoint at the same scale (always the
            # case for square frames): the chain skips the intermediate.
            rows -= 1
            cols -= 1
    return PatchGrid(rows, cols, rows * unit, cols * unit)


def total_quantized_tokens(
    classes: Sequence[FrameClass],
    frame_dims: Sequence[tuple[int, int]],
    tokens_per_slow: int,
    cfg: GeometryConfig,
) -> int:
    """Total tokens of the video when slow frames get ``tokens_per_slow``.

    Fast frames are capped at ``cfg.fast_budget(tokens_per_slow)``.
    Non-decreasing in ``tokens_per_slow``, which is what makes the binary
    search in ``solve_video_budget`` valid.
    """
    if len(classes) != len(frame_dims):
        raise InvalidInputError(
            f"classes and frame_dims are misaligned: "
            f"{len(classes)} vs {len(frame_dims)}"
        )
    fast = cfg.fast_budget(tokens_per_slow)
    total = 0
    for cls, (width_px, height_px) in zip(classes, frame_dims):
        cap = tokens_per_slow if cls.kind is FrameKind.SLOW else fast
        total += fit_grid(width_px, height_px, cap, cfg).tokens
    return total


def largest_feasible_tokens(
    total_for: Callable[[int], int], lo: int, hi: int, budget: int
) -> Optional[int]:
    """Largest t in [lo, hi] with ``total_for(t) <= budget``, or None.

    ``total_for`` must be non-decreasing.  Returns None when even ``lo`` is
    infeasible.
    """
    if lo > hi:
        raise InvalidInputError(f"empty search range [{lo}, {hi}]")
    if total_for(lo) > budget:
        return None
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if total_for(mid) <= budget:
            lo = mid
        else:
            hi = mid - 1
    return lo


def solve_video_budget(
    classes: Sequence[FrameClass],
    frame_dims: Sequence[tuple[int, int]],
    cfg: GeometryConfig,
) -> BudgetPlan:
    """Maximize tokens per slow frame under the total video budget.

    Binary-searches the largest integer allocation T such that the
    quantized total (slow frames capped at T, fast frames at
    ``fast_budget(T)``) stays within ``cfg.video_token_budget``, then
    returns the per-frame grids at that T.
    """
    if not classes:
        raise InvalidInputError("no frames to budget")
    if len(classes) != len(frame_dims):
        raise InvalidInputError(
            f"classes and frame_dims are misaligned: "
            f"{len(classes)} vs {len(frame_dims)}"
        )
    if classes[0].kind is not FrameKind.SLOW:
        raise InvalidInputError("frame 0 must be slow")

    lo = cfg.min_tokens_per_frame
    hi = cfg.max_tokens_per_frame
    if any(c.kind is FrameKind.FAST for c in classes):
        # The fast budget must stay at >= 1 token, so T cannot drop below
        # ceil(1 / fast_ratio).
        lo = max(lo, math.ceil(1 / Fraction(str(cfg.fast_ratio))))
        if lo > hi:
            raise InvalidConfigError(
                f"fast_ratio {cfg.fast_ratio} needs at least {lo} tokens per "
                f"slow frame, above max_tokens_per_frame {hi}"
            )

    def total_for(t: int) -> int:
        return total_quantized_tokens(classes, frame_dims, t, cfg)

    solved = largest_feasible_tokens(total_for, lo, hi, cfg.video_token_budget)
    if solved is None:
        raise BudgetTooSmallError(cfg.video_token_budget, total_for(lo))

    fast = cfg.fast_budget(solved)
    grids = tuple(
        fit_grid(w, h, solved if cls.kind is FrameKind.SLOW else fast, cfg)
        for cls, (w, h) in zip(classes, frame_dims)
    )
    return BudgetPlan(
        tokens_per_slow=solved,
        tokens_per_fast=fast,
        grids=grids,
        total_tokens=sum(g.tokens for g in grids),
    )
