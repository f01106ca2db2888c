"""In-process mock of the Trends wire contract.

Serves registered series data and supports scripted failure scenarios
(throttling bursts, server errors, truncated bodies) plus a timestamped
request log, which is how the rate-limit ceiling is verified in tests.
"""

from __future__ import annotations

import json
import threading
import time
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

import numpy as np


class MockTrendsServer:
    def __init__(self):
        # (canonical expr, geo) -> list of (iso date, value)
        self.over_time: dict[tuple[str, str], list[tuple[str, int]]] = {}
        # canonical expr -> list of (geo, value | None)
        self.by_state: dict[str, list[tuple[str, int | None]]] = {}
        self.request_log: list[tuple[float, str]] = []
        self._script: deque = deque()
        self._lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- data registration ------------------------------------------------

    def add_over_time(self, expr_text: str, geo: str, points: list[tuple[str, int]]) -> None:
        self.over_time[(expr_text, geo)] = list(points)

    def add_by_state(self, expr_text: str, entries: list[tuple[str, int | None]]) -> None:
        self.by_state[expr_text] = list(entries)

    @classmethod
    def from_snapshot(cls, snapshot, catalog) -> "MockTrendsServer":
        """Expose a snapshot's content over the wire contract."""
        server = cls()
        expr_of = {q.id: q.expr.canonical_text for q in catalog.queries}
        for series in list(snapshot.national) + list(snapshot.state_weekly):
            text = expr_of.get(series.query_id, series.query_id)
            server.add_over_time(text, series.geo,
                                 [(p.date.isoformat(), p.value) for p in series.points])
        panel = snapshot.state_window
        if panel is not None:
            for j, query_id in enumerate(panel.query_ids):
                entries = []
                for i, state in enumerate(panel.states):
                    v = panel.values[i, j]
                    entries.append((state, None if np.isnan(v) else int(v)))
                server.add_by_state(expr_of.get(query_id, query_id), entries)
        return server

    # -- scripted scenarios ----------------------------------------------------

    def script(self, *actions) -> None:
        """Queue per-request actions: ("status", 429), ("truncate",), ("pass",)."""
        with self._lock:
            self._script.extend(actions)

    def _next_action(self):
        with self._lock:
            return self._script.popleft() if self._script else ("pass",)

    # -- lifecycle ---------------------------------------------------------------

    def start(self) -> "MockTrendsServer":
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # silence default stderr chatter
                pass

            def do_GET(self):
                outer.request_log.append((time.monotonic(), self.path))
                action = outer._next_action()
                if action[0] == "status":
                    body = json.dumps({"error": f"scripted {action[1]}"}).encode()
                    self.send_response(action[1])
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                    return
                split = urlsplit(self.path)
                params = {k: v[0] for k, v in parse_qs(split.query).items()}
                payload, status = outer._respond(split.path, params)
                body = json.dumps(payload).encode()
                if action[0] == "truncate":
                    body = body[: max(1, len(body) // 2)]
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def _respond(self, path: str, params: dict) -> tuple[dict, int]:
        if path == "/trends/over_time":
            key = (params.get("q", ""), params.get("geo", ""))
            if key not in self.over_time:
                return {"error": f"no series for {key}"}, 404
            lo, hi = params.get("from"), params.get("to")
            points = [{"date": d, "value": v} for d, v in self.over_time[key]
                      if (lo is None or d >= lo) and (hi is None or d <= hi)]
            return {"points": points}, 200
        if path == "/trends/by_state":
            q = params.get("q", "")
            if q not in self.by_state:
                return {"error": f"no state data for {q!r}"}, 404
            return {"states": [{"geo": g, "value": v} for g, v in self.by_state[q]]}, 200
        return {"error": f"unknown path {path}"}, 404

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    @property
    def url(self) -> str:
        assert self._server is not None, "server not started"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "MockTrendsServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
