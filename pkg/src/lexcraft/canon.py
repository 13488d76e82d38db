"""Canonical serialization: the byte layout behind every digest and golden file.

Rules: object keys sorted bytewise, compact separators, floats rendered with
exactly six decimals (``-0.0`` normalized to ``0.0``), strings UTF-8 without
ASCII escaping. Two documents that round to the same six-decimal values are,
by design, the same bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"non-finite float not canonicalizable: {x!r}")
    if x == 0.0:
        x = 0.0  # collapses -0.0
    return format(x, ".6f")


def _write(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _write(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"non-string key not canonicalizable: {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _write(obj[key], out)
        out.append("}")
    else:
        raise TypeError(f"type not canonicalizable: {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Serialize to the canonical string form."""
    out: list[str] = []
    _write(obj, out)
    return "".join(out)


def dump_bytes(obj: Any) -> bytes:
    return dumps(obj).encode("utf-8")


def digest(obj: Any) -> str:
    """SHA-256 hex digest of the canonical serialization."""
    return hashlib.sha256(dump_bytes(obj)).hexdigest()


def loads(data: str | bytes) -> Any:
    return json.loads(data)
