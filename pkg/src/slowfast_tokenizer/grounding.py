"""Markup grammar for spatial and temporal grounding labels.

Serialized forms (spatial coordinates are integers in [0, 1000), clip times
are non-negative seconds):

    <|point_start|>[[x, y], ...]<|point_end|>
    <|box_start|>[[x1, y1, x2, y2], ...]<|box_end|>
    <|polygon_start|>[[[x, y], [x, y], [x, y], ...], ...]<|polygon_end|>
    <|object_ref_start|>label<|object_ref_end|>   (may prefix geometry)
    <|ocr_text_start|>text<|ocr_text_end|>        (prefixes a box/polygon)
    <|clip_time_start|>[t1, t2]<|clip_time_end|> caption

Boxes are (top-left, bottom-right) with x1 <= x2 and y1 <= y2.  Polygon
vertices run clockwise in image coordinates (y grows downward), which makes
the shoelace sum positive.  The parser recognizes these forms embedded in
free text; in strict mode any malformed span raises ``GroundingParseError``
with a byte offset, in lenient mode malformed spans are skipped and
reported (counter-clockwise polygons are auto-reversed).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .errors import GroundingParseError, InvalidInputError

COORD_RANGE = 1000

_SPAN_KINDS = ("point", "box", "polygon", "object_ref", "ocr_text", "clip_time")
_START = {k: f"<|{k}_start|>" for k in _SPAN_KINDS}
_END = {k: f"<|{k}_end|>" for k in _SPAN_KINDS}
_TOKEN_RE = re.compile(
    "|".join(re.escape(t) for k in _SPAN_KINDS for t in (_START[k], _END[k]))
)
_GEOMETRY_KINDS = ("point", "box", "polygon")


class GroundingVariant(Enum):
    POINTS = "points"
    BOXES = "boxes"
    POLYGONS = "polygons"
    OCR_BOXES = "ocr_boxes"
    OCR_POLYGONS = "ocr_polygons"
    CLIP_TIME = "clip_time"
    OBJECT_REF = "object_ref"


Point = tuple[int, int]
Box = tuple[int, int, int, int]
Polygon = tuple[Point, ...]
Payload = Union[tuple[Point, ...], tuple[Box, ...], tuple[Polygon, ...], tuple[float, float], None]


def normalize_coord(v_px, extent_px) -> int:
    """Map a pixel coordinate to the half-open integer range [0, 1000).

    ``floor(v / extent * 1000)``, clamped to 999 so the extent itself stays
    inside the range.
    """
    if extent_px < 1:
        raise InvalidInputError(f"extent must be >= 1 pixel, got {extent_px!r}")
    if not 0 <= v_px <= extent_px:
        raise InvalidInputError(
            f"coordinate {v_px!r} outside [0, {extent_px}]"
        )
    if isinstance(v_px, int) and isinstance(extent_px, int):
        q = v_px * COORD_RANGE // extent_px
    else:
        q = math.floor(v_px * COORD_RANGE / extent_px)
    return min(q, COORD_RANGE - 1)


def signed_area_2x(vertices: Polygon) -> int:
    """Twice the shoelace area; positive means clockwise with y down."""
    total = 0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total


def _check_coord(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidInputError(f"non-integer coordinate: {value!r}")
    if not 0 <= value < COORD_RANGE:
        raise InvalidInputError(
            f"coordinate {value} out of range [0, {COORD_RANGE})"
        )
    return value


def _check_point(obj) -> Point:
    if not isinstance(obj, (list, tuple)) or len(obj) != 2:
        raise InvalidInputError(f"point must be [x, y], got {obj!r}")
    return (_check_coord(obj[0]), _check_coord(obj[1]))


def _check_box(obj) -> Box:
    if not isinstance(obj, (list, tuple)) or len(obj) != 4:
        raise InvalidInputError(f"box must be [x1, y1, x2, y2], got {obj!r}")
    x1, y1, x2, y2 = (_check_coord(v) for v in obj)
    if x1 > x2 or y1 > y2:
        raise InvalidInputError(
            f"inverted box: [{x1}, {y1}, {x2}, {y2}] needs x1 <= x2 and y1 <= y2"
        )
    return (x1, y1, x2, y2)


def _check_polygon(obj, *, auto_reverse: bool = False) -> Polygon:
    if not isinstance(obj, (list, tuple)):
        raise InvalidInputError(f"polygon must be a vertex list, got {obj!r}")
    if len(obj) < 3:
        raise InvalidInputError(
            f"polygon needs at least 3 vertices, got {len(obj)}"
        )
    vertices = tuple(_check_point(v) for v in obj)
    area2 = signed_area_2x(vertices)
    if area2 <= 0:
        if auto_reverse and area2 < 0:
            return tuple(reversed(vertices))
        reason = "degenerate polygon (zero area)" if area2 == 0 else (
            "counter-clockwise polygon (vertices must run clockwise, y down)"
        )
        raise InvalidInputError(reason)
    return vertices


def _check_label(label: Optional[str], *, required: bool, what: str) -> None:
    if label is None:
        if required:
            raise InvalidInputError(f"{what} requires a label")
        return
    if not isinstance(label, str) or not label:
        raise InvalidInputError(f"{what} label must be a non-empty string")
    if "<|" in label:
        raise InvalidInputError(f"{what} label may not contain markup tokens")


def _render_seconds(value: float) -> str:
    # Shortest decimal form that parses back to exactly the same float, so
    # emit/parse round-trips hold for every valid clip time; one-decimal
    # inputs (the documented 0.1 s precision) print as themselves.
    return repr(float(value))


@dataclass(frozen=True)
class GroundingItem:
    """One grounding annotation: a variant, its payload, an optional label.

    The label carries the object reference for point/box/polygon variants,
    the recognized text for OCR variants, and the event caption for clips.
    """

    variant: GroundingVariant
    payload: Payload
    label: Optional[str] = None

    def __post_init__(self):
        v = self.variant
        if v is GroundingVariant.POINTS:
            payload = tuple(_check_point(p) for p in self._seq("points"))
            _check_label(self.label, required=False, what="points")
        elif v is GroundingVariant.BOXES:
            payload = tuple(_check_box(b) for b in self._seq("boxes"))
            _check_label(self.label, required=False, what="boxes")
        elif v is GroundingVariant.POLYGONS:
            payload = tuple(_check_polygon(p) for p in self._seq("polygons"))
            _check_label(self.label, required=False, what="polygons")
        elif v is GroundingVariant.OCR_BOXES:
            payload = tuple(_check_box(b) for b in self._seq("boxes"))
            _check_label(self.label, required=True, what="OCR")
        elif v is GroundingVariant.OCR_POLYGONS:
            payload = tuple(_check_polygon(p) for p in self._seq("polygons"))
            _check_label(self.label, required=True, what="OCR")
        elif v is GroundingVariant.CLIP_TIME:
            payload = self._check_clip()
            if self.label is not None:
                _check_label(self.label, required=False, what="clip caption")
                if self.label != self.label.strip():
                    raise InvalidInputError(
                        "clip caption may not have leading/trailing whitespace"
                    )
        elif v is GroundingVariant.OBJECT_REF:
            if self.payload is not None:
                raise InvalidInputError("object_ref carries no payload")
            payload = None
            _check_label(self.label, required=True, what="object_ref")
        else:  # pragma: no cover - enum is closed
            raise InvalidInputError(f"unknown variant: {v!r}")
        object.__setattr__(self, "payload", payload)

    def _seq(self, what: str):
        if not isinstance(self.payload, (list, tuple)) or not self.payload:
            raise InvalidInputError(f"{what} payload must be a non-empty list")
        return self.payload

    def _check_clip(self) -> tuple[float, float]:
        p = self.payload
        if not isinstance(p, (list, tuple)) or len(p) != 2:
            raise InvalidInputError(f"clip payload must be [t1, t2], got {p!r}")
        t1, t2 = float(p[0]), float(p[1])
        if not (math.isfinite(t1) and math.isfinite(t2)):
            raise InvalidInputError("clip times must be finite")
        if t1 < 0 or t2 < 0 or t1 > t2:
            raise InvalidInputError(
                f"clip times need 0 <= t1 <= t2, got [{t1}, {t2}]"
            )
        return (t1, t2)


def _fmt_flat(values) -> str:
    return "[" + ", ".join(str(v) for v in values) + "]"


def _fmt_nested(groups) -> str:
    return "[" + ", ".join(_fmt_flat(g) for g in groups) + "]"


def emit_grounding(item: GroundingItem) -> str:
    """Serialize one item to its exact markup form."""
    v = item.variant
    if v is GroundingVariant.OBJECT_REF:
        return f"{_START['object_ref']}{item.label}{_END['object_ref']}"
    if v is GroundingVariant.CLIP_TIME:
        t1, t2 = item.payload
        core = (
            f"{_START['clip_time']}[{_render_seconds(t1)}, "
            f"{_render_seconds(t2)}]{_END['clip_time']}"
        )
        return f"{core} {item.label}" if item.label else core

    if v in (GroundingVariant.POINTS, GroundingVariant.BOXES):
        kind = "point" if v is GroundingVariant.POINTS else "box"
        body = _fmt_nested(item.payload)
        prefix = (
            f"{_START['object_ref']}{item.label}{_END['object_ref']}"
            if item.label
            else ""
        )
    elif v is GroundingVariant.POLYGONS:
        kind = "polygon"
        body = "[" + ", ".join(_fmt_nested(poly) for poly in item.payload) + "]"
        prefix = (
            f"{_START['object_ref']}{item.label}{_END['object_ref']}"
            if item.label
            else ""
        )
    elif v is GroundingVariant.OCR_BOXES:
        kind = "box"
        body = _fmt_nested(item.payload)
        prefix = f"{_START['ocr_text']}{item.label}{_END['ocr_text']}"
    elif v is GroundingVariant.OCR_POLYGONS:
        kind = "polygon"
        body = "[" + ", ".join(_fmt_nested(poly) for poly in item.payload) + "]"
        prefix = f"{_START['ocr_text']}{item.label}{_END['ocr_text']}"
    else:  # pragma: no cover - enum is closed
        raise InvalidInputError(f"unknown variant: {v!r}")
    return f"{prefix}{_START[kind]}{body}{_END[kind]}"


@dataclass(frozen=True)
class ParseIssue:
    """A malformed span skipped (or repaired) in lenient mode."""

    reason: str
    char_index: int
    byte_offset: int


@dataclass(frozen=True)
class ParsedSpan:
    """One parsed item plus where its markup started in the input."""

    item: GroundingItem
    char_index: int


@dataclass(frozen=True)
class _Span:
    kind: str
    body: str
    start: int  # char index of the opening token
    end: int  # char index just past the closing token
    body_start: int


def _byte_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


class _SpanError(Exception):
    def __init__(self, reason: str, char_index: int):
        super().__init__(reason)
        self.reason = reason
        self.char_index = char_index


def _tokenize_spans(text: str, strict: bool, issues: list[ParseIssue]) -> list[_Span]:
    tokens = list(_TOKEN_RE.finditer(text))
    spans: list[_Span] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        kind, role = _classify_token(tok.group())
        if role == "end":
            _report(
                f"unexpected {tok.group()} with no opening token",
                tok.start(), text, strict, issues,
            )
            i += 1
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].group() != _END[kind]:
            _report(
                f"unterminated {tok.group()} span",
                tok.start(), text, strict, issues,
            )
            i += 1
            continue
        closing = tokens[i + 1]
        spans.append(
            _Span(
                kind=kind,
                body=text[tok.end():closing.start()],
                start=tok.start(),
                end=closing.end(),
                body_start=tok.end(),
            )
        )
        i += 2
    return spans


def _classify_token(token: str) -> tuple[str, str]:
    inner = token[2:-2]  # strip "<|" and "|>"
    kind, _, role = inner.rpartition("_")
    return kind, role


def _report(
    reason: str, char_index: int, text: str, strict: bool, issues: list[ParseIssue]
) -> None:
    if strict:
        raise GroundingParseError(reason, char_index, _byte_offset(text, char_index))
    issues.append(ParseIssue(reason, char_index, _byte_offset(text, char_index)))


def _load_body(span: _Span):
    try:
        return json.loads(span.body)
    except json.JSONDecodeError as exc:
        raise _SpanError(
            f"malformed {span.kind} payload: {exc.msg}",
            span.body_start + exc.pos,
        ) from None


def _geometry_item(
    span: _Span,
    label: Optional[str],
    ocr: bool,
    lenient: bool,
    issues: Optional[list[ParseIssue]] = None,
    text: str = "",
) -> GroundingItem:
    data = _load_body(span)
    try:
        if span.kind == "point":
            if ocr:
                raise InvalidInputError("OCR text must prefix a box or polygon")
            return GroundingItem(GroundingVariant.POINTS, data, label)
        if span.kind == "box":
            variant = GroundingVariant.OCR_BOXES if ocr else GroundingVariant.BOXES
            return GroundingItem(variant, data, label)
        # polygon
        if not isinstance(data, (list, tuple)):
            raise InvalidInputError(f"polygon payload must be a list, got {data!r}")
        if lenient:
            repaired = []
            for poly in data:
                if (
                    isinstance(poly, (list, tuple))
                    and len(poly) >= 3
                    and isinstance(signed := _try_signed_area(poly), int)
                    and signed < 0
                ):
                    repaired.append(tuple(reversed([tuple(v) for v in poly])))
                    if issues is not None:
                        issues.append(
                            ParseIssue(
                                "counter-clockwise polygon auto-reversed",
                                span.start,
                                _byte_offset(text, span.start),
                            )
                        )
                else:
                    repaired.append(poly)
            data = repaired
        variant = GroundingVariant.OCR_POLYGONS if ocr else GroundingVariant.POLYGONS
        return GroundingItem(variant, data, label)
    except InvalidInputError as exc:
        raise _SpanError(str(exc), span.start) from None


def _try_signed_area(poly) -> Optional[int]:
    try:
        return signed_area_2x(tuple(_check_point(v) for v in poly))
    except InvalidInputError:
        return None


def _clip_item(span: _Span, text: str, next_start: int) -> GroundingItem:
    data = _load_body(span)
    if (
        not isinstance(data, list)
        or len(data) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in data)
    ):
        raise _SpanError(
            f"clip payload must be [t1, t2] with numeric times, got {span.body!r}",
            span.start,
        )
    caption = text[span.end:next_start].strip()
    try:
        return GroundingItem(
            GroundingVariant.CLIP_TIME,
            (float(data[0]), float(data[1])),
            caption or None,
        )
    except InvalidInputError as exc:
        raise _SpanError(str(exc), span.start) from None


def _only_whitespace_between(text: str, a: int, b: int) -> bool:
    return text[a:b].strip() == ""


def scan_grounding(
    text: str, *, strict: bool = True
) -> tuple[list[ParsedSpan], list[ParseIssue]]:
    """Parse all grounding items embedded in free text, in order.

    Strict mode raises ``GroundingParseError`` at the first malformed span;
    lenient mode skips malformed spans (auto-reversing counter-clockwise
    polygons) and reports them as issues.
    """
    issues: list[ParseIssue] = []
    spans = _tokenize_spans(text, strict, issues)
    results: list[ParsedSpan] = []
    j = 0
    while j < len(spans):
        span = spans[j]
        try:
            if span.kind in _GEOMETRY_KINDS:
                item = _geometry_item(span, None, False, not strict, issues, text)
                results.append(ParsedSpan(item, span.start))
                j += 1
            elif span.kind in ("object_ref", "ocr_text"):
                label = span.body
                if not label:
                    raise _SpanError(f"empty {span.kind} label", span.start)
                follower = spans[j + 1] if j + 1 < len(spans) else None
                attached = (
                    follower is not None
                    and follower.kind in _GEOMETRY_KINDS
                    and _only_whitespace_between(text, span.end, follower.start)
                )
                if span.kind == "object_ref":
                    if attached:
                        item = _geometry_item(
                            follower, label, False, not strict, issues, text
                        )
                        results.append(ParsedSpan(item, span.start))
                        j += 2
                    else:
                        results.append(
                            ParsedSpan(
                                GroundingItem(GroundingVariant.OBJECT_REF, None, label),
                                span.start,
                            )
                        )
                        j += 1
                else:  # ocr_text
                    if not attached or follower.kind == "point":
                        raise _SpanError(
                            "OCR text must be followed by a box or polygon span",
                            span.start,
                        )
                    item = _geometry_item(
                        follower, label, True, not strict, issues, text
                    )
                    results.append(ParsedSpan(item, span.start))
                    j += 2
            elif span.kind == "clip_time":
                next_start = spans[j + 1].start if j + 1 < len(spans) else len(text)
                item = _clip_item(span, text, next_start)
                results.append(ParsedSpan(item, span.start))
                j += 1
            else:  # pragma: no cover - _SPAN_KINDS is closed
                raise _SpanError(f"unknown span kind {span.kind!r}", span.start)
        except _SpanError as exc:
            _report(exc.reason, exc.char_index, text, strict, issues)
            j += 1
    return results, issues


def parse_grounding(text: str, *, strict: bool = True) -> list[GroundingItem]:
    """Items recognized in the text, in order of appearance."""
    parsed, _ = scan_grounding(text, strict=strict)
    return [p.item for p in parsed]


def parse_grounding_with_issues(
    text: str,
) -> tuple[list[GroundingItem], list[ParseIssue]]:
    """Lenient parse: items plus a report of every skipped/repaired span."""
    parsed, issues = scan_grounding(text, strict=False)
    return [p.item for p in parsed], issues
