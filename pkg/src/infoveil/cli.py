"""Batch driver: ingest, analyze, export, serve, and fixture generation.

Exit codes: 0 success, 1 any domain error (message on stderr), 2 usage.
Analytic subcommands read one snapshot and write canonical CSV/JSON files
under --out; repeated runs on the same snapshot and flags are byte-identical.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from . import payloads
from .errors import InfoveilError
from .ingest.client import RateLimiter, TrendsClient
from .ingest.pipeline import ingest_from_fixtures, ingest_from_source, write_fixture_files
from .ingest.snapshot import Snapshot, SnapshotStore
from .queries import load_catalog
from .serialize import canonical_json, csv_text
from .service.watchlist import WatchlistStore

ENV_STORE = "INFOVEIL_SNAPSHOT_DIR"
ENV_BASE_URL = "INFOVEIL_TRENDS_BASE_URL"
ENV_BIND = "INFOVEIL_BIND"
ENV_REFRESH = "INFOVEIL_REFRESH_HOURS"


def _load_snapshot(snapshot_path: str | None, store_dir: str | None) -> Snapshot:
    if snapshot_path:
        path = Path(snapshot_path)
        return SnapshotStore(path.parent).load(path.stem)
    store_dir = store_dir or os.environ.get(ENV_STORE)
    if not store_dir:
        raise click.UsageError("provide --snapshot FILE or --store DIR "
                               f"(or set {ENV_STORE})")
    return SnapshotStore(store_dir).latest()


def _write(out_dir: str, name: str, text: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8")
    return path


def _emit_json(out_dir: str, name: str, payload: dict) -> None:
    path = _write(out_dir, f"{name}.json", canonical_json(payload) + "\n")
    click.echo(f"wrote {path}")


def _emit_csv(out_dir: str, name: str, header: list[str], rows: list[list]) -> None:
    path = _write(out_dir, f"{name}.csv", csv_text(header, rows))
    click.echo(f"wrote {path}")


snapshot_options = [
    click.option("--snapshot", "snapshot_path", type=click.Path(exists=True),
                 help="Path to a snapshot .json file."),
    click.option("--store", "store_dir", type=click.Path(),
                 help=f"Snapshot store directory (default ${ENV_STORE}); uses LATEST."),
]


def with_snapshot(fn):
    for option in reversed(snapshot_options):
        fn = option(fn)
    return fn


@click.group()
def main():
    """Search-trend infoveillance toolkit."""


@main.command()
@click.option("--base-url", default=None, help=f"Trends-compatible source (default ${ENV_BASE_URL}).")
@click.option("--fixtures", "fixtures_dir", type=click.Path(exists=True),
              help="Build the snapshot from fixture CSVs instead of a source.")
@click.option("--store", "store_dir", required=True, type=click.Path())
@click.option("--state-weekly", is_flag=True, default=False,
              help="Also fetch per-state weekly series (many requests).")
@click.option("--requests-per-minute", default=30.0, show_default=True)
def ingest(base_url, fixtures_dir, store_dir, state_weekly, requests_per_minute):
    """Build and commit a snapshot from a live/mock source or fixture files."""
    catalog = load_catalog()
    store = SnapshotStore(store_dir)
    if fixtures_dir:
        snapshot = ingest_from_fixtures(fixtures_dir, catalog)
    else:
        base_url = base_url or os.environ.get(ENV_BASE_URL)
        if not base_url:
            raise click.UsageError(f"provide --base-url or --fixtures (or set {ENV_BASE_URL})")
        with TrendsClient(base_url, limiter=RateLimiter(requests_per_minute)) as client:
            snapshot = ingest_from_source(client, catalog,
                                          include_state_weekly=state_weekly)
    digest = store.commit(snapshot)
    click.echo(digest)


@main.command()
@with_snapshot
@click.option("--from", "from_window", required=True, help="Baseline window (YYYY-MM or a:b).")
@click.option("--to", "to_window", required=True, help="Target window.")
@click.option("--cap", type=float, default=None, help="Cap extreme growth, e.g. 10000.")
@click.option("--out", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def change(snapshot_path, store_dir, from_window, to_window, cap, out, fmt):
    """Percent change of each query between two windows."""
    snapshot = _load_snapshot(snapshot_path, store_dir)
    payload = payloads.change_payload(
        snapshot, load_catalog(),
        payloads.parse_window(from_window), payloads.parse_window(to_window), cap)
    if fmt == "json":
        _emit_json(out, "change", payload)
        return
    rows = [[r["query_id"], r["theme"], r["value"], r["capped"], r["zero_baseline"]]
            for r in payload["rows"]]
    _emit_csv(out, "change", ["query_id", "theme", "change_percent", "capped", "zero_baseline"], rows)


@main.command()
@with_snapshot
@click.option("--out", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def corr(snapshot_path, store_dir, out, fmt):
    """Pairwise-complete correlation over the state window panel."""
    snapshot = _load_snapshot(snapshot_path, store_dir)
    payload = payloads.correlation_payload(snapshot)
    click.echo(f"dropped ({len(payload['dropped'])}): {','.join(payload['dropped'])}")
    if fmt == "json":
        _emit_json(out, "correlation", payload)
        return
    rows = [[c["query_a"], c["query_b"], c["r"], c["n_pairs"], c["band"]]
            for c in payload["cells"]]
    _emit_csv(out, "correlation", ["query_a", "query_b", "r", "n_pairs", "band"], rows)


@main.command()
@with_snapshot
@click.option("--k", default=2, show_default=True)
@click.option("--threshold", default=0.2, show_default=True)
@click.option("--n-top", default=5, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def pca(snapshot_path, store_dir, k, threshold, n_top, out, fmt):
    """PCA of the state window panel plus thresholded interpretation."""
    snapshot = _load_snapshot(snapshot_path, store_dir)
    payload = payloads.pca_payload(snapshot, k)
    interp = payloads.interpret_payload(snapshot, k, threshold, n_top)
    if fmt == "json":
        _emit_json(out, "pca", payload)
        _emit_json(out, "pca_interpret", interp)
        return
    loadings, scores, ratios = [], [], []
    for comp in payload["components"]:
        ratios.append([comp["index"], comp["explained_variance_ratio"]])
        for entry in comp["loadings"]:
            loadings.append([comp["index"], entry["query_id"], entry["loading"]])
        for entry in comp["scores"]:
            scores.append([comp["index"], entry["state"], entry["score"]])
    _emit_csv(out, "pca_loadings", ["component", "query_id", "loading"], loadings)
    _emit_csv(out, "pca_scores", ["component", "state", "score"], scores)
    _emit_csv(out, "pca_ratios", ["component", "explained_variance_ratio"], ratios)
    salient = [[c["component_index"], s["query_id"], s["loading"]]
               for c in interp["components"] for s in c["salient"]]
    top_states = [[c["component_index"], s["state"], s["score"]]
                  for c in interp["components"] for s in c["top_states"]]
    _emit_csv(out, "pca_salient", ["component", "query_id", "loading"], salient)
    _emit_csv(out, "pca_top_states", ["component", "state", "score"], top_states)


@main.command()
@with_snapshot
@click.option("--query", required=True)
@click.option("--indicator", required=True)
@click.option("--lag", type=int, default=None)
@click.option("--lag-min", type=int, default=None)
@click.option("--lag-max", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def leadlag(snapshot_path, store_dir, query, indicator, lag, lag_min, lag_max, out, fmt):
    """Lagged correlation of a query against an indicator (single lag or scan)."""
    snapshot = _load_snapshot(snapshot_path, store_dir)
    lag_range = (lag_min, lag_max) if lag_min is not None and lag_max is not None else None
    payload = payloads.leadlag_payload(snapshot, query, indicator, lag=lag, lag_range=lag_range)
    if fmt == "json":
        _emit_json(out, "leadlag", payload)
        return
    if "results" in payload:
        rows = [[r["lag"], r["r"], r["n"]] for r in payload["results"]]
    else:
        rows = [[payload["lag"], payload["r"], payload["n"]]]
    _emit_csv(out, "leadlag", ["lag", "r", "n"], rows)


@main.command()
@with_snapshot
@click.option("--query", required=True)
@click.option("--threshold", default=50.0, show_default=True)
@click.option("--events", "events_file", type=click.Path(exists=True), default=None,
              help="Override the bundled policy events (name,date CSV).")
@click.option("--out", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def leadtime(snapshot_path, store_dir, query, threshold, events_file, out, fmt):
    """Lead time of a query's threshold crossing against policy events."""
    from .leadlag import bundled_policy_events

    snapshot = _load_snapshot(snapshot_path, store_dir)
    events = bundled_policy_events(events_file) if events_file else None
    payload = payloads.leadtime_payload(snapshot, query, threshold, events)
    if fmt == "json":
        _emit_json(out, "leadtime", payload)
        return
    rows = [[e["event"], e["event_date"], e["crossed"], e["crossing_date"], e["lead_days"]]
            for e in payload["events"]]
    _emit_csv(out, "leadtime", ["event", "event_date", "crossed", "crossing_date", "lead_days"], rows)


@main.command()
@with_snapshot
@click.option("--query", required=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="json")
def choropleth(snapshot_path, store_dir, query, out, fmt):
    """Per-state aggregate RSVs for one query (dashboard map format)."""
    snapshot = _load_snapshot(snapshot_path, store_dir)
    payload = payloads.choropleth_payload(snapshot, query)
    if fmt == "json":
        _emit_json(out, "choropleth", payload)
        return
    rows = [[v["geo"], v["value"]] for v in payload["values"]]
    _emit_csv(out, "choropleth", ["geo", "value"], rows)


@main.command()
@click.option("--store", "store_dir", default=None, type=click.Path(),
              help=f"Snapshot store directory (default ${ENV_STORE}).")
@click.option("--watchlist", "watchlist_path", default=None, type=click.Path())
@click.option("--bind", default=None, help=f"host:port (default ${ENV_BIND} or 127.0.0.1:8600).")
@click.option("--base-url", default=None, help="Enable scheduled re-ingestion from this source.")
@click.option("--refresh-hours", type=float, default=None,
              help=f"Re-ingestion period (default ${ENV_REFRESH} or 24).")
def serve(store_dir, watchlist_path, bind, base_url, refresh_hours):
    """Run the HTTP API over the latest committed snapshot."""
    from .service import RefreshWorker, run_service

    store_dir = store_dir or os.environ.get(ENV_STORE)
    if not store_dir:
        raise click.UsageError(f"provide --store or set {ENV_STORE}")
    store = SnapshotStore(store_dir)
    catalog = load_catalog()
    watchlist_path = watchlist_path or (Path(store_dir) / "watchlist.json")
    watchlist_store = WatchlistStore(watchlist_path, catalog)
    bind = bind or os.environ.get(ENV_BIND, "127.0.0.1:8600")
    base_url = base_url or os.environ.get(ENV_BASE_URL)
    worker = None
    if base_url:
        hours = refresh_hours if refresh_hours is not None else float(os.environ.get(ENV_REFRESH, "24"))
        worker = RefreshWorker(TrendsClient(base_url), catalog, store,
                               period_seconds=hours * 3600)
    run_service(store, watchlist_store, bind=bind, catalog=catalog, refresh_worker=worker)


@main.group()
def fixtures():
    """Planted-ground-truth fixture generation."""


@fixtures.command("gen")
@click.option("--seed", default=20200415, show_default=True)
@click.option("--out", required=True, type=click.Path())
def fixtures_gen(seed, out):
    """Generate the planted fixture snapshot, its CSVs, and its manifest."""
    from dataclasses import asdict

    from .fixtures import paper_shaped_snapshot

    snapshot, manifest = paper_shaped_snapshot(seed)
    out_path = Path(out)
    write_fixture_files(snapshot, out_path)
    store = SnapshotStore(out_path / "store")
    digest = store.commit(snapshot)
    _write(out, "manifest.json", canonical_json(asdict(manifest)) + "\n")
    click.echo(digest)


@main.command()
@with_snapshot
@click.option("--out", required=True, type=click.Path())
@click.option("--from", "from_window", default="2020-01", show_default=True)
@click.option("--to", "to_window", default="2020-03", show_default=True)
@click.option("--cap", type=float, default=10000.0, show_default=True)
@click.option("--k", default=2, show_default=True)
@click.option("--threshold", default=0.2, show_default=True)
def report(snapshot_path, store_dir, out, from_window, to_window, cap, k, threshold):
    """Render the standard figure set (PNG) alongside the delimited exports."""
    from .report import render_report

    snapshot = _load_snapshot(snapshot_path, store_dir)
    written = render_report(snapshot, load_catalog(), Path(out),
                            from_window=payloads.parse_window(from_window),
                            to_window=payloads.parse_window(to_window),
                            cap=cap, k=k, threshold=threshold)
    for path in written:
        click.echo(f"wrote {path}")


def entrypoint(argv=None) -> int:
    try:
        main.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return 1
    except InfoveilError as exc:
        click.echo(f"error [{exc.code}]: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(entrypoint())
