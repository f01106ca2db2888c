"""Plain-dict payload builders shared by the HTTP API and the CLI exports.

Both surfaces render these dicts (the API inside a snapshot-hash envelope,
the CLI as canonical JSON/CSV files), so the same snapshot and parameters
produce the same numbers everywhere.
"""

from __future__ import annotations

import math
from datetime import date

from .analytics import (
    StatePanel,
    classify_band,
    drop_incomplete_queries,
    interpret_component,
    pca,
    pearson_matrix,
    percent_change,
)
from .errors import EmptyWindow, InfoveilError, UnknownQuery
from .leadlag import (
    PolicyEvent,
    best_lag,
    bundled_policy_events,
    lag_profile,
    lagged_correlation,
    lead_time,
    weekly_to_monthly_means,
)
from .queries import Catalog
from .series import DateRange, Granularity, month_window


class BadParameter(InfoveilError):
    code = "bad_parameter"


def parse_window(text: str) -> DateRange:
    """Accept 'YYYY-MM' (whole month) or 'YYYY-MM-DD:YYYY-MM-DD'."""
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":", 1)
        try:
            return DateRange(date.fromisoformat(lo), date.fromisoformat(hi))
        except ValueError:
            raise BadParameter(f"bad window {text!r}") from None
    parts = text.split("-")
    if len(parts) == 2:
        try:
            return month_window(int(parts[0]), int(parts[1]))
        except ValueError:
            raise BadParameter(f"bad month window {text!r}") from None
    raise BadParameter(f"bad window {text!r}; use YYYY-MM or YYYY-MM-DD:YYYY-MM-DD")


def parse_date_window(from_text: str | None, to_text: str | None) -> DateRange | None:
    """Optional ISO from/to pair; both or neither."""
    if from_text is None and to_text is None:
        return None
    if from_text is None or to_text is None:
        raise BadParameter("provide both from and to, or neither")
    try:
        return DateRange(date.fromisoformat(from_text), date.fromisoformat(to_text))
    except ValueError:
        raise BadParameter(f"bad date window {from_text!r}..{to_text!r}") from None


def _window_pair(window: DateRange) -> list[str]:
    return [window.start.isoformat(), window.end.isoformat()]


def catalog_payload(catalog: Catalog) -> dict:
    return {
        "version": catalog.version,
        "queries": [
            {
                "id": q.id,
                "theme": q.theme.value,
                "expr": q.expr.canonical_text,
                "terms": list(q.expr.terms),
                "ideology": q.ideology.value if q.ideology else None,
            }
            for q in catalog.queries
        ],
    }


def _find_series(snapshot, query_id: str, geo: str):
    series = (snapshot.national_series(query_id) if geo == "US"
              else snapshot.state_series(query_id, geo))
    if series is None:
        raise UnknownQuery(f"snapshot has no series for query {query_id!r} at {geo!r}")
    return series


def trends_payload(snapshot, query_id: str, geo: str = "US",
                   window: DateRange | None = None) -> dict:
    series = _find_series(snapshot, query_id, geo)
    if window is not None:
        series = series.clip(window)
    return {
        "query_id": series.query_id,
        "geo": series.geo,
        "granularity": series.granularity.value,
        "points": [{"date": p.date.isoformat(), "value": p.value} for p in series.points],
    }


def panel_payload(panel: StatePanel) -> dict:
    return {
        "window": _window_pair(panel.window),
        "states": list(panel.states),
        "query_ids": list(panel.query_ids),
        "values": [[None if math.isnan(v) else int(v) for v in row] for row in panel.values],
    }


def change_payload(snapshot, catalog: Catalog, from_window: DateRange,
                   to_window: DateRange, cap: float | None) -> dict:
    rows = []
    for query in catalog.queries:
        series = snapshot.national_series(query.id)
        if series is None:
            continue
        try:
            result = percent_change(series.dated_values(), from_window, to_window, cap)
        except EmptyWindow:
            continue
        rows.append({
            "query_id": query.id,
            "theme": query.theme.value,
            "value": result.value,
            "capped": result.capped,
            "zero_baseline": result.zero_baseline,
        })
    return {
        "from_window": _window_pair(from_window),
        "to_window": _window_pair(to_window),
        "cap": cap,
        "rows": rows,
    }


def _reduced_panel(snapshot) -> tuple[StatePanel, list[str]]:
    if snapshot.state_window is None:
        raise UnknownQuery("snapshot carries no state window panel")
    return drop_incomplete_queries(snapshot.state_window)


def correlation_payload(snapshot) -> dict:
    reduced, dropped = _reduced_panel(snapshot)
    matrix = pearson_matrix(reduced)
    cells = []
    n = len(matrix.query_ids)
    for i in range(n):
        for j in range(i + 1, n):
            r = matrix.r[i, j]
            missing = math.isnan(r)
            cells.append({
                "query_a": matrix.query_ids[i],
                "query_b": matrix.query_ids[j],
                "r": None if missing else float(r),
                "n_pairs": int(matrix.n_pairs[i, j]),
                "band": None if missing else classify_band(float(r)),
            })
    return {
        "window": _window_pair(reduced.window),
        "dropped": dropped,
        "cells": cells,
    }


def pca_payload(snapshot, k: int) -> dict:
    reduced, dropped = _reduced_panel(snapshot)
    result = pca(reduced, k)
    return {
        "k": k,
        "standardization": result.standardization,
        "window": _window_pair(reduced.window),
        "dropped": dropped,
        "components": [
            {
                "index": idx,
                "explained_variance_ratio": comp.explained_variance_ratio,
                "unstable": comp.unstable,
                "loadings": [{"query_id": q, "loading": l}
                             for q, l in zip(result.query_ids, comp.loadings)],
                "scores": [{"state": s, "score": v}
                           for s, v in zip(result.states, comp.scores)],
            }
            for idx, comp in enumerate(result.components)
        ],
    }


def interpret_payload(snapshot, k: int, threshold: float = 0.2,
                      n_top_states: int = 5) -> dict:
    reduced, _ = _reduced_panel(snapshot)
    result = pca(reduced, k)
    components = []
    for idx in range(k):
        interp = interpret_component(result, idx, threshold=threshold,
                                     n_top_states=n_top_states)
        components.append({
            "component_index": idx,
            "salient": [{"query_id": q, "loading": l} for q, l in interp.salient],
            "top_states": [{"state": s, "score": v} for s, v in interp.top_states],
            "label": interp.label,
        })
    return {
        "k": k,
        "threshold": threshold,
        "n_top_states": n_top_states,
        "components": components,
    }


def choropleth_payload(snapshot, query_id: str,
                       requested_window: DateRange | None = None) -> dict:
    if snapshot.state_window is None:
        raise UnknownQuery("snapshot carries no state window panel")
    panel = snapshot.state_window
    if requested_window is not None and requested_window != panel.window:
        raise BadParameter(
            f"panel window is {panel.window.start}..{panel.window.end}; "
            "other windows need a re-ingest")
    if query_id not in panel.query_ids:
        raise UnknownQuery(f"panel has no query {query_id!r}")
    column = panel.column(query_id)
    return {
        "query_id": query_id,
        "window": _window_pair(panel.window),
        "values": [{"geo": s, "value": None if math.isnan(v) else int(v)}
                   for s, v in zip(panel.states, column)],
    }


def _leadlag_inputs(snapshot, query_id: str, indicator_name: str):
    series = snapshot.national_series(query_id)
    if series is None:
        raise UnknownQuery(f"snapshot has no national series for {query_id!r}")
    indicator = snapshot.indicator(indicator_name)
    if indicator is None:
        raise UnknownQuery(f"snapshot has no indicator {indicator_name!r}")
    query_points = series.dated_values()
    if indicator.granularity is Granularity.MONTHLY:
        query_points = weekly_to_monthly_means(query_points)
    return query_points, indicator.dated_values(), indicator.granularity


def leadlag_payload(snapshot, query_id: str, indicator_name: str,
                    lag: int | None = None,
                    lag_range: tuple[int, int] | None = None) -> dict:
    query_points, indicator_points, granularity = _leadlag_inputs(
        snapshot, query_id, indicator_name)
    base = {"query_id": query_id, "indicator": indicator_name,
            "granularity": granularity.value}
    if lag_range is not None:
        profile = lag_profile(query_points, indicator_points, lag_range, granularity)
        best = best_lag(query_points, indicator_points, lag_range, granularity)
        return {
            **base,
            "lag_min": lag_range[0],
            "lag_max": lag_range[1],
            "results": [{"lag": p.lag, "r": p.r, "n": p.n} for p in profile],
            "best": {"lag": best.lag, "r": best.r, "n": best.n},
        }
    if lag is None:
        raise BadParameter("provide either lag or lag_min/lag_max")
    result = lagged_correlation(query_points, indicator_points, lag, granularity)
    return {**base, "lag": result.lag, "r": result.r, "n": result.n}


def leadtime_payload(snapshot, query_id: str, threshold: float = 50.0,
                     events: list[PolicyEvent] | None = None) -> dict:
    series = snapshot.national_series(query_id)
    if series is None:
        raise UnknownQuery(f"snapshot has no national series for {query_id!r}")
    events = events if events is not None else bundled_policy_events()
    rows = []
    for event in events:
        result = lead_time(series.dated_values(), threshold, event)
        rows.append({
            "event": event.name,
            "event_date": event.date.isoformat(),
            "crossed": result.crossed,
            "crossing_date": result.crossing_date.isoformat() if result.crossing_date else None,
            "lead_days": result.lead_days,
        })
    return {"query_id": query_id, "threshold": threshold, "events": rows}
