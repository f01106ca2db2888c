from datetime import date

import numpy as np
import pytest

from infoveil.analytics import StatePanel
from infoveil.errors import UnknownGeography
from infoveil.geo import Region, all_states, geo_table, region_of, regional_aggregate
from infoveil.series import DateRange

WINDOW = DateRange(date(2020, 3, 1), date(2020, 4, 15))


def test_table_covers_50_states_plus_dc():
    table = geo_table()
    assert len(table) == 51
    assert "US-DC" in table


def test_regions_partition_states():
    by_region = {}
    for ref in geo_table().values():
        by_region.setdefault(ref.region, []).append(ref.state)
    assert sum(len(v) for v in by_region.values()) == 51
    assert {len(by_region[r]) for r in Region} == {9, 12, 17, 13}


def test_dc_assigned_to_south_atlantic():
    region, division = region_of("US-DC")
    assert region is Region.SOUTH
    assert division == "South Atlantic"


def test_louisiana_is_south():
    assert region_of("US-LA")[0] is Region.SOUTH


def test_new_york_is_northeast():
    assert region_of("US-NY")[0] is Region.NORTHEAST


def test_unknown_code_rejected():
    with pytest.raises(UnknownGeography):
        region_of("US-ZZ")


def southern_states():
    return [s for s in all_states() if geo_table()[s].region is Region.SOUTH]


def test_constant_region_mean():
    states = tuple(all_states())
    values = np.full((51, 1), 40.0)
    for i, s in enumerate(states):
        if geo_table()[s].region is Region.SOUTH:
            values[i, 0] = 80.0
    panel = StatePanel(states, ("stimulus-check",), values, WINDOW)
    agg = regional_aggregate(panel, "mean")
    assert agg[Region.SOUTH] == [80.0]


def test_mean_matches_arithmetic_oracle():
    rng = np.random.default_rng(7)
    states = tuple(all_states())
    values = rng.integers(0, 101, size=(51, 3)).astype(float)
    values[4, 1] = np.nan
    panel = StatePanel(states, ("a", "b", "c"), values, WINDOW)
    agg = regional_aggregate(panel, "mean")
    for region in Region:
        idx = [i for i, s in enumerate(states) if geo_table()[s].region is region]
        for j in range(3):
            cells = [values[i, j] for i in idx if not np.isnan(values[i, j])]
            expected = sum(cells) / len(cells)
            assert abs(agg[region][j] - expected) < 1e-12


def test_median_matches_sort_and_pick_oracle():
    rng = np.random.default_rng(11)
    states = tuple(all_states())
    values = rng.integers(0, 101, size=(51, 2)).astype(float)
    panel = StatePanel(states, ("a", "b"), values, WINDOW)
    agg = regional_aggregate(panel, "median")
    for region in Region:
        idx = [i for i, s in enumerate(states) if geo_table()[s].region is region]
        for j in range(2):
            cells = sorted(values[i, j] for i in idx)
            mid = len(cells) // 2
            expected = cells[mid] if len(cells) % 2 else (cells[mid - 1] + cells[mid]) / 2
            assert agg[region][j] == expected


def test_all_missing_region_yields_none():
    states = tuple(all_states())
    values = np.full((51, 1), 50.0)
    for i, s in enumerate(states):
        if geo_table()[s].region is Region.WEST:
            values[i, 0] = np.nan
    panel = StatePanel(states, ("q",), values, WINDOW)
    agg = regional_aggregate(panel, "mean")
    assert agg[Region.WEST] == [None]
    assert agg[Region.SOUTH] == [50.0]


def test_unknown_panel_state_rejected():
    panel = StatePanel(("US-XX",), ("q",), np.array([[1.0]]), WINDOW)
    with pytest.raises(UnknownGeography):
        regional_aggregate(panel, "mean")
