"""Token layout assembly: boundary tokens, timestamps, vision blocks.

Each video frame contributes three consecutive elements to the layout: the
slow/fast boundary special token, the absolute timestamp rendered at 0.1 s
precision, and the frame's vision-patch block.  Layouts built by hand may
also hold bare vision blocks (e.g. standalone images, ``kind=None``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .budget import BudgetPlan, PatchGrid
from .errors import InvalidInputError
from .frames import FrameClass, FrameKind

DEFAULT_SLOW_FRAME_TOKEN = "<|slow_frame|>"
DEFAULT_FAST_FRAME_TOKEN = "<|fast_frame|>"


def render_timestamp(seconds: float) -> str:
    """Render seconds with one decimal digit, e.g. 22.34 -> ``"22.3s"``."""
    if not (math.isfinite(seconds) and seconds >= 0):
        raise InvalidInputError(
            f"timestamp must be a finite non-negative number of seconds, "
            f"got {seconds!r}"
        )
    return f"{seconds:.1f}s"


@dataclass(frozen=True)
class SpecialToken:
    """One literal special token; counts as a single sequence token."""

    name: str

    def __post_init__(self):
        if not self.name:
            raise InvalidInputError("special token name must be non-empty")


@dataclass(frozen=True)
class TimestampText:
    """A rendered absolute timestamp; counts as a single sequence token."""

    seconds: float
    text: str

    @classmethod
    def for_seconds(cls, seconds: float) -> "TimestampText":
        return cls(seconds=seconds, text=render_timestamp(seconds))


@dataclass(frozen=True)
class VisionBlock:
    """One frame's patch tokens; ``kind`` is None for standalone images."""

    frame_index: int
    grid: PatchGrid
    kind: Optional[FrameKind]

    def __post_init__(self):
        if self.frame_index < 0:
            raise InvalidInputError(
                f"frame_index must be >= 0, got {self.frame_index}"
            )


LayoutElement = Union[SpecialToken, TimestampText, VisionBlock]


@dataclass(frozen=True)
class TokenLayout:
    """Ordered sequence of special tokens, timestamps, and vision blocks."""

    elements: tuple[LayoutElement, ...]

    @property
    def vision_token_total(self) -> int:
        return sum(
            el.grid.tokens for el in self.elements if isinstance(el, VisionBlock)
        )

    @property
    def token_count(self) -> int:
        """Sequence length: one token per non-vision element plus patches."""
        total = 0
        for el in self.elements:
            total += el.grid.tokens if isinstance(el, VisionBlock) else 1
        return total

    def to_json_obj(self) -> list[dict]:
        out: list[dict] = []
        for el in self.elements:
            if isinstance(el, SpecialToken):
                out.append({"type": "special", "name": el.name})
            elif isinstance(el, TimestampText):
                out.append(
                    {"type": "timestamp", "seconds": el.seconds, "text": el.text}
                )
            elif isinstance(el, VisionBlock):
                out.append(
                    {
                        "type": "vision",
                        "frame_index": el.frame_index,
                        "rows": el.grid.rows,
                        "cols": el.grid.cols,
                        "kind": el.kind.value if el.kind is not None else "image",
                    }
                )
            else:
                raise InvalidInputError(
                    f"unknown layout element kind: {type(el).__name__}"
                )
        return out


def assemble_layout(
    classes: Sequence[FrameClass],
    plan: BudgetPlan,
    timestamps: Sequence[float],
    *,
    slow_token: str = DEFAULT_SLOW_FRAME_TOKEN,
    fast_token: str = DEFAULT_FAST_FRAME_TOKEN,
) -> TokenLayout:
    """Emit [boundary token][timestamp][vision block] per frame, in order."""
    if not (len(classes) == len(plan.grids) == len(timestamps)):
        raise InvalidInputError(
            f"classes, plan grids, and timestamps are misaligned: "
            f"{len(classes)}, {len(plan.grids)}, {len(timestamps)}"
        )
    elements: list[LayoutElement] = []
    for cls, grid, seconds in zip(classes, plan.grids, timestamps):
        name = slow_token if cls.kind is FrameKind.SLOW else fast_token
        elements.append(SpecialToken(name))
        elements.append(TimestampText.for_seconds(seconds))
        elements.append(VisionBlock(cls.index, grid, cls.kind))
    return TokenLayout(tuple(elements))
