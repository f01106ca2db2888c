"""Census region/division reference data and regional aggregation.

The bundled table covers the 50 states plus DC. DC is carried in the South
region / South Atlantic division, matching census groupings.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import UnknownGeography


class Region(str, Enum):
    NORTHEAST = "Northeast"
    MIDWEST = "Midwest"
    SOUTH = "South"
    WEST = "West"


@dataclass(frozen=True)
class GeoRef:
    state: str
    name: str
    region: Region
    division: str


@lru_cache(maxsize=1)
def geo_table() -> dict[str, GeoRef]:
    text = resources.files("infoveil.data").joinpath("census_regions.csv").read_text(encoding="utf-8")
    table = {}
    for row in csv.DictReader(text.splitlines()):
        ref = GeoRef(row["state"], row["name"], Region(row["region"]), row["division"])
        table[ref.state] = ref
    assert len(table) == 51
    return table


def all_states() -> list[str]:
    """The 51 geography codes in a stable alphabetical-by-name order."""
    return sorted(geo_table())


def region_of(state: str) -> tuple[Region, str]:
    try:
        ref = geo_table()[state]
    except KeyError:
        raise UnknownGeography(f"no census entry for {state!r}") from None
    return ref.region, ref.division


def regional_aggregate(panel, statistic: str = "mean") -> dict[Region, list[float | None]]:
    """Per-region statistic over present panel cells, one entry per query.

    A region whose states are all missing for a query yields None.
    """
    if statistic not in ("mean", "median"):
        raise ValueError(f"statistic must be mean or median, got {statistic!r}")
    for state in panel.states:
        if state not in geo_table():
            raise UnknownGeography(f"panel state {state!r} not in census table")
    out: dict[Region, list[float | None]] = {}
    rows = {region: [i for i, s in enumerate(panel.states) if geo_table()[s].region is region]
            for region in Region}
    for region in Region:
        idx = rows[region]
        cells: list[float | None] = []
        for j in range(len(panel.query_ids)):
            present = [panel.values[i, j] for i in idx if not np.isnan(panel.values[i, j])]
            if not present:
                cells.append(None)
            elif statistic == "mean":
                cells.append(float(np.mean(present)))
            else:
                cells.append(float(np.median(present)))
        out[region] = cells
    return out
