"""Flat ``key = value`` text documents.

One key per line, ``#`` starts a comment, arrays are comma-separated lists,
and a 2-D array is a list of rows separated by ``;``.  Floats are written with
``repr`` so that a parse of an emitted document reproduces every value
bit-for-bit.
"""

from __future__ import annotations

import math
from typing import Any, Dict, Iterable, Mapping, Tuple

import numpy as np


class DocumentError(ValueError):
    """Raised for malformed key-value documents."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _fmt_scalar(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def format_value(v: Any) -> str:
    if isinstance(v, np.ndarray):
        if v.ndim == 2:
            return "; ".join(", ".join(_fmt_scalar(x) for x in row) for row in v)
        return ", ".join(_fmt_scalar(x) for x in v.ravel())
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt_scalar(x) for x in v)
    return _fmt_scalar(v)


def dumps(items: Iterable[Tuple[str, Any]] | Mapping[str, Any], header: str | None = None) -> str:
    if isinstance(items, Mapping):
        items = items.items()
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    for key, value in items:
        lines.append(f"{key} = {format_value(value)}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Dict[str, Tuple[str, int]]:
    """Parse a document into ``{key: (raw value, line number)}``."""
    out: Dict[str, Tuple[str, int]] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DocumentError(f"expected 'key = value', got {raw.strip()!r}", n)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise DocumentError("empty key", n)
        if key in out:
            raise DocumentError(f"duplicate key {key!r}", n)
        out[key] = (value, n)
    return out


def parse_float(raw: str, key: str = "", line: int | None = None) -> float:
    try:
        return float(raw)
    except ValueError:
        raise DocumentError(f"{key}: cannot parse {raw!r} as a number", line) from None


def parse_int(raw: str, key: str = "", line: int | None = None) -> int:
    try:
        return int(raw)
    except ValueError:
        raise DocumentError(f"{key}: cannot parse {raw!r} as an integer", line) from None


def parse_vector(raw: str, key: str = "", line: int | None = None) -> np.ndarray:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise DocumentError(f"{key}: empty list", line)
    return np.array([parse_float(p, key, line) for p in parts])


def parse_matrix(raw: str, key: str = "", line: int | None = None) -> np.ndarray:
    rows = [parse_vector(r, key, line) for r in raw.split(";") if r.strip()]
    if not rows or len({len(r) for r in rows}) != 1:
        raise DocumentError(f"{key}: ragged or empty matrix", line)
    return np.vstack(rows)
