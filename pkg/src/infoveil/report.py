"""Figure rendering for the report path: national trends by theme, change
bars, correlation heatmap, PCA biplot, lag profile, and a state tile-grid
choropleth. PNGs are written next to the canonical CSV exports."""

from __future__ import annotations

import math
from datetime import date
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import payloads
from .analytics import drop_incomplete_queries, interpret_component, pca, pearson_matrix
from .leadlag import bundled_policy_events
from .queries import Catalog
from .serialize import csv_text
from .series import DateRange

# State tile-grid cartogram: geo code -> (column, row), row 0 at the top.
TILE_GRID = {
    "US-AK": (0, 0), "US-ME": (10, 0),
    "US-WI": (4, 1), "US-VT": (8, 1), "US-NH": (9, 1),
    "US-WA": (0, 2), "US-ID": (1, 2), "US-MT": (2, 2), "US-ND": (3, 2), "US-MN": (4, 2),
    "US-IL": (5, 2), "US-MI": (6, 2), "US-NY": (8, 2), "US-MA": (9, 2), "US-RI": (10, 2),
    "US-OR": (0, 3), "US-NV": (1, 3), "US-WY": (2, 3), "US-SD": (3, 3), "US-IA": (4, 3),
    "US-IN": (5, 3), "US-OH": (6, 3), "US-PA": (7, 3), "US-NJ": (8, 3), "US-CT": (9, 3),
    "US-CA": (0, 4), "US-UT": (1, 4), "US-CO": (2, 4), "US-NE": (3, 4), "US-MO": (4, 4),
    "US-KY": (5, 4), "US-WV": (6, 4), "US-VA": (7, 4), "US-MD": (8, 4), "US-DE": (9, 4),
    "US-AZ": (1, 5), "US-NM": (2, 5), "US-KS": (3, 5), "US-AR": (4, 5), "US-TN": (5, 5),
    "US-NC": (6, 5), "US-SC": (7, 5), "US-DC": (8, 5),
    "US-OK": (3, 6), "US-LA": (4, 6), "US-MS": (5, 6), "US-AL": (6, 6), "US-GA": (7, 6),
    "US-HI": (0, 7), "US-TX": (3, 7), "US-FL": (8, 7),
}


def _save(fig, out_dir: Path, name: str) -> Path:
    path = out_dir / name
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def fig_trends_by_theme(snapshot, catalog: Catalog, out_dir: Path) -> Path:
    themes = sorted({q.theme for q in catalog.queries}, key=lambda t: t.value)
    fig, axes = plt.subplots(3, 2, figsize=(14, 12), sharex=True)
    events = bundled_policy_events()
    for ax, theme in zip(axes.flat, themes):
        for query in catalog.queries:
            if query.theme is not theme:
                continue
            series = snapshot.national_series(query.id)
            if series is None:
                continue
            ax.plot(series.dates, series.values, lw=0.9, label=query.id)
        for event in events:
            ax.axvline(event.date, color="grey", ls=":", lw=0.8)
        ax.set_title(theme.value)
        ax.set_ylim(0, 105)
        ax.legend(fontsize=5, ncol=2, loc="upper left")
    fig.suptitle("National weekly RSV by theme (dotted: 2020 federal NPI events)")
    return _save(fig, out_dir, "trends_by_theme.png")


def fig_change_bars(change_payload: dict, out_dir: Path) -> Path:
    rows = [r for r in change_payload["rows"] if r["value"] is not None]
    rows.sort(key=lambda r: r["value"])
    labels = [r["query_id"] for r in rows]
    values = [r["value"] for r in rows]
    colors = ["#b2182b" if r["capped"] else "#2166ac" for r in rows]
    fig, ax = plt.subplots(figsize=(8, max(4, 0.22 * len(rows))))
    ax.barh(labels, values, color=colors)
    ax.set_xlabel("change in mean RSV, % (red: capped)")
    ax.set_xscale("symlog")
    ax.tick_params(axis="y", labelsize=6)
    ax.axvline(0, color="black", lw=0.8)
    window = f"{change_payload['from_window'][0]} .. {change_payload['to_window'][1]}"
    ax.set_title(f"Window-over-window change ({window})")
    return _save(fig, out_dir, "change_bars.png")


def fig_correlation_heatmap(snapshot, out_dir: Path) -> Path:
    reduced, _ = drop_incomplete_queries(snapshot.state_window)
    matrix = pearson_matrix(reduced)
    fig, ax = plt.subplots(figsize=(10, 9))
    im = ax.imshow(matrix.r, vmin=-1, vmax=1, cmap="RdBu_r")
    ax.set_xticks(range(len(matrix.query_ids)))
    ax.set_xticklabels(matrix.query_ids, rotation=90, fontsize=6)
    ax.set_yticks(range(len(matrix.query_ids)))
    ax.set_yticklabels(matrix.query_ids, fontsize=6)
    fig.colorbar(im, ax=ax, shrink=0.8, label="pairwise-complete Pearson r")
    ax.set_title("State-level query correlations")
    return _save(fig, out_dir, "correlation_heatmap.png")


def fig_pca_biplot(snapshot, out_dir: Path, k: int = 2, threshold: float = 0.2) -> Path:
    reduced, _ = drop_incomplete_queries(snapshot.state_window)
    result = pca(reduced, max(k, 2))
    xs = result.components[0].scores
    ys = result.components[1].scores
    fig, ax = plt.subplots(figsize=(9, 8))
    ax.scatter(xs, ys, s=14, color="#555555")
    top = {s for s, _ in interpret_component(result, 0).top_states}
    for state, x, y in zip(result.states, xs, ys):
        ax.annotate(state.removeprefix("US-"), (x, y), fontsize=6,
                    color="#b2182b" if state in top else "#555555")
    scale = max(max(abs(v) for v in xs), max(abs(v) for v in ys)) * 0.8
    for idx, query in enumerate(result.query_ids):
        lx = result.components[0].loadings[idx]
        ly = result.components[1].loadings[idx]
        if max(abs(lx), abs(ly)) < threshold:
            continue
        ax.annotate("", xy=(lx * scale, ly * scale), xytext=(0, 0),
                    arrowprops=dict(arrowstyle="->", color="#2166ac", lw=1.2))
        ax.annotate(query, (lx * scale, ly * scale), fontsize=6, color="#2166ac")
    r1 = result.components[0].explained_variance_ratio * 100
    r2 = result.components[1].explained_variance_ratio * 100
    ax.set_xlabel(f"component 1 ({r1:.0f}% of variance)")
    ax.set_ylabel(f"component 2 ({r2:.0f}% of variance)")
    ax.axhline(0, color="grey", lw=0.5)
    ax.axvline(0, color="grey", lw=0.5)
    ax.set_title(f"State scores with salient query loadings (|loading| >= {threshold})")
    return _save(fig, out_dir, "pca_biplot.png")


def fig_lag_profile(leadlag_payload: dict, out_dir: Path) -> Path:
    results = leadlag_payload["results"]
    lags = [r["lag"] for r in results]
    rs = [r["r"] for r in results]
    best = leadlag_payload["best"]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(lags, rs, marker="o", ms=3)
    ax.axvline(best["lag"], color="#b2182b", ls="--", lw=1,
               label=f"best lag {best['lag']} (r={best['r']:.2f})")
    ax.set_xlabel("lag (periods; positive = query leads)")
    ax.set_ylabel("Pearson r")
    ax.set_title(f"{leadlag_payload['query_id']} vs {leadlag_payload['indicator']}")
    ax.legend()
    return _save(fig, out_dir, "lag_profile.png")


def fig_choropleth_grid(choropleth_payload: dict, out_dir: Path) -> Path:
    cmap = plt.get_cmap("YlOrRd")
    fig, ax = plt.subplots(figsize=(9, 6.5))
    for entry in choropleth_payload["values"]:
        geo, value = entry["geo"], entry["value"]
        col, row = TILE_GRID[geo]
        y = 7 - row
        if value is None:
            ax.add_patch(plt.Rectangle((col, y), 0.92, 0.92, facecolor="white",
                                       edgecolor="grey", hatch="///"))
        else:
            ax.add_patch(plt.Rectangle((col, y), 0.92, 0.92,
                                       facecolor=cmap(value / 100), edgecolor="grey"))
        ax.text(col + 0.46, y + 0.46, geo.removeprefix("US-"),
                ha="center", va="center", fontsize=7)
    ax.set_xlim(-0.2, 11.2)
    ax.set_ylim(-0.2, 8.2)
    ax.set_aspect("equal")
    ax.axis("off")
    sm = plt.cm.ScalarMappable(cmap=cmap, norm=plt.Normalize(0, 100))
    fig.colorbar(sm, ax=ax, shrink=0.7, label="RSV (hatched: missing)")
    window = choropleth_payload["window"]
    ax.set_title(f"{choropleth_payload['query_id']} by state, {window[0]} .. {window[1]}")
    return _save(fig, out_dir, "choropleth_grid.png")


def render_report(snapshot, catalog: Catalog, out_dir: Path, *,
                  from_window: DateRange, to_window: DateRange,
                  cap: float | None = 10000.0, k: int = 2,
                  threshold: float = 0.2,
                  choropleth_query: str = "stimulus-check",
                  leadlag_query: str = "unemployment-benefits",
                  leadlag_indicator: str = "unemployment-claims") -> list[Path]:
    """Render every figure plus the matching CSVs into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    change = payloads.change_payload(snapshot, catalog, from_window, to_window, cap)
    written.append(_csv(out_dir, "change.csv",
                        ["query_id", "theme", "change_percent", "capped", "zero_baseline"],
                        [[r["query_id"], r["theme"], r["value"], r["capped"], r["zero_baseline"]]
                         for r in change["rows"]]))
    written.append(fig_change_bars(change, out_dir))
    written.append(fig_trends_by_theme(snapshot, catalog, out_dir))

    if snapshot.state_window is not None:
        corr = payloads.correlation_payload(snapshot)
        written.append(_csv(out_dir, "correlation.csv",
                            ["query_a", "query_b", "r", "n_pairs", "band"],
                            [[c["query_a"], c["query_b"], c["r"], c["n_pairs"], c["band"]]
                             for c in corr["cells"]]))
        written.append(fig_correlation_heatmap(snapshot, out_dir))
        written.append(fig_pca_biplot(snapshot, out_dir, k=k, threshold=threshold))
        if choropleth_query in snapshot.state_window.query_ids:
            choro = payloads.choropleth_payload(snapshot, choropleth_query)
            written.append(fig_choropleth_grid(choro, out_dir))

    if snapshot.indicator(leadlag_indicator) is not None:
        lag_scan = payloads.leadlag_payload(snapshot, leadlag_query, leadlag_indicator,
                                            lag_range=(-8, 8))
        written.append(_csv(out_dir, "leadlag.csv", ["lag", "r", "n"],
                            [[r["lag"], r["r"], r["n"]] for r in lag_scan["results"]]))
        written.append(fig_lag_profile(lag_scan, out_dir))
    return written


def _csv(out_dir: Path, name: str, header: list[str], rows: list[list]) -> Path:
    path = out_dir / name
    path.write_text(csv_text(header, rows), encoding="utf-8")
    return path
