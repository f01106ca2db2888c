"""Relative-search-value quantization from raw share data.

Reproduces the published normalization: each query count is divided by the
total search count of its bucket, and the resulting shares are scaled so the
largest becomes 100, rounded to integers. Having the quantizer in-tree lets
fixture builders plant known share structures and validate the rest of the
pipeline against exact ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Hashable

from .errors import EmptyPanel, InvariantViolation


class ShareAxis(str, Enum):
    TIME_WITHIN_GEO = "time_within_geo"
    GEO_WITHIN_WINDOW = "geo_within_window"


@dataclass(frozen=True)
class ShareEntry:
    key: Hashable
    query_search_count: float
    total_search_count: float

    def __post_init__(self) -> None:
        if self.total_search_count <= 0:
            raise InvariantViolation(f"total search count must be positive at {self.key!r}")
        if self.query_search_count < 0:
            raise InvariantViolation(f"query search count negative at {self.key!r}")


@dataclass(frozen=True)
class RawSharePanel:
    axis: ShareAxis
    entries: tuple[ShareEntry, ...]

    def __post_init__(self) -> None:
        keys = [e.key for e in self.entries]
        if len(set(keys)) != len(keys):
            raise InvariantViolation("duplicate keys in share panel")


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero (not banker's rounding)."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def quantize_rsv(panel: RawSharePanel) -> list[tuple[Hashable, int]]:
    """Scale per-bucket shares so the max maps to 100; all-zero panels stay zero."""
    if not panel.entries:
        raise EmptyPanel("cannot quantize an empty share panel")
    shares = [e.query_search_count / e.total_search_count for e in panel.entries]
    peak = max(shares)
    if peak == 0:
        return [(e.key, 0) for e in panel.entries]
    return [(e.key, round_half_away(100.0 * s / peak)) for e, s in zip(panel.entries, shares)]
