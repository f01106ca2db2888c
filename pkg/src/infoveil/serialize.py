"""Canonical serialization: deterministic JSON bytes and fixed-format CSV.

All analytic exports round floats to 12 significant digits before emitting,
so repeated runs on the same snapshot produce byte-identical files and the
API payloads can be byte-compared with CLI exports.
"""

from __future__ import annotations

import csv
import json
from datetime import date, datetime
from io import StringIO
from typing import Any

FLOAT_DIGITS = 12


def round_float(x: float) -> float:
    return float(f"{x:.{FLOAT_DIGITS}g}")


def format_float(x: float) -> str:
    return f"{x:.{FLOAT_DIGITS}g}"


def _canonicalize(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _canonicalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonicalize(v) for v in obj]
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        return round_float(obj)
    if isinstance(obj, (date, datetime)):
        return obj.isoformat()
    return obj


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, no whitespace, 12-digit floats."""
    return json.dumps(_canonicalize(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_json_bytes(obj: Any) -> bytes:
    return canonical_json(obj).encode("utf-8")


def csv_text(header: list[str], rows: list[list[Any]]) -> str:
    """CSV with unix newlines and canonical float formatting."""
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else format_float(v) if isinstance(v, float) else v
                         for v in row])
    return buf.getvalue()
