"""Canonical JSON output: sorted keys, fixed float format, stable layout.

Floats print with 9 significant digits and integers stay integers, so
identical inputs always produce byte-identical documents.  Lists holding
only scalars render on one line to keep large index tables compact.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import InvalidInputError

_INDENT = "  "


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise InvalidInputError(f"cannot serialize non-finite float {value!r}")
    if value == 0.0:
        value = 0.0  # normalize -0.0
    return format(value, ".9g")


def _is_scalar(obj) -> bool:
    return obj is None or isinstance(
        obj, (bool, int, float, str, np.integer, np.floating)
    )


def _emit_scalar(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    raise InvalidInputError(f"cannot serialize {type(obj).__name__} to JSON")


def _emit(obj, level: int) -> str:
    if _is_scalar(obj):
        return _emit_scalar(obj)
    pad = _INDENT * (level + 1)
    close_pad = _INDENT * level
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        keys = sorted(obj)
        if any(not isinstance(k, str) for k in keys):
            raise InvalidInputError("JSON object keys must be strings")
        body = ",\n".join(
            f"{pad}{json.dumps(k, ensure_ascii=False)}: {_emit(obj[k], level + 1)}"
            for k in keys
        )
        return "{\n" + body + "\n" + close_pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(_is_scalar(v) for v in obj):
            return "[" + ", ".join(_emit_scalar(v) for v in obj) + "]"
        body = ",\n".join(f"{pad}{_emit(v, level + 1)}" for v in obj)
        return "[\n" + body + "\n" + close_pad + "]"
    raise InvalidInputError(f"cannot serialize {type(obj).__name__} to JSON")


def dumps_canonical(obj) -> str:
    """Serialize to canonical JSON text with a trailing newline."""
    return _emit(obj, 0) + "\n"
