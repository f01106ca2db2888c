"""Panel statistics: period change, missing-query elimination, pairwise-complete
Pearson correlation with banding, and correlation-matrix PCA with thresholded
interpretation and per-state scores."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AllQueriesDropped,
    BadIndex,
    ConstantColumn,
    EmptyWindow,
    KTooLarge,
    OutOfRange,
)
from .series import DateRange

# Relative eigenvalue gap below which neighboring components are flagged unstable.
EIGENGAP_STABILITY = 1e-10


@dataclass(frozen=True, eq=False)
class StatePanel:
    """Geography x query matrix of window-aggregated RSVs; NaN marks missing."""

    states: tuple[str, ...]
    query_ids: tuple[str, ...]
    values: np.ndarray
    window: DateRange

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.states), len(self.query_ids)):
            raise ValueError(f"matrix shape {v.shape} does not match axes "
                             f"({len(self.states)}, {len(self.query_ids)})")
        present = v[~np.isnan(v)]
        if present.size and (present.min() < 0 or present.max() > 100):
            raise ValueError("present panel values must lie in 0-100")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StatePanel):
            return NotImplemented
        return (self.states == other.states and self.query_ids == other.query_ids
                and self.window == other.window
                and np.array_equal(self.values, other.values, equal_nan=True))

    def column(self, query_id: str) -> np.ndarray:
        return self.values[:, self.query_ids.index(query_id)]


@dataclass(frozen=True)
class ChangeResult:
    """Percent change of to-window mean over from-window mean.

    A zero baseline is reported as a marker (new-topic semantics), never as
    infinity; values beyond the cap are clamped and flagged.
    """

    value: float | None
    capped: bool = False
    zero_baseline: bool = False


def percent_change(points: Iterable[tuple[date, float]],
                   from_window: DateRange,
                   to_window: DateRange,
                   cap: float | None = None) -> ChangeResult:
    pts = list(points)
    from_vals = [v for d, v in pts if d in from_window]
    to_vals = [v for d, v in pts if d in to_window]
    if not from_vals:
        raise EmptyWindow(f"no points in baseline window {from_window.start}..{from_window.end}")
    if not to_vals:
        raise EmptyWindow(f"no points in target window {to_window.start}..{to_window.end}")
    from_mean = float(np.mean(from_vals))
    to_mean = float(np.mean(to_vals))
    if from_mean == 0.0:
        return ChangeResult(value=None, zero_baseline=True)
    change = (to_mean / from_mean - 1.0) * 100.0
    if cap is not None and change > cap:
        return ChangeResult(value=float(cap), capped=True)
    return ChangeResult(value=change)


def drop_incomplete_queries(panel: StatePanel) -> tuple[StatePanel, list[str]]:
    """Remove query columns with any missing state; all geographies are kept."""
    missing_any = np.isnan(panel.values).any(axis=0)
    dropped = [q for q, m in zip(panel.query_ids, missing_any) if m]
    if len(dropped) == len(panel.query_ids):
        raise AllQueriesDropped("every query has at least one missing state")
    keep = ~missing_any
    reduced = StatePanel(
        states=panel.states,
        query_ids=tuple(q for q, k in zip(panel.query_ids, keep) if k),
        values=panel.values[:, keep].copy(),
        window=panel.window,
    )
    return reduced, dropped


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    query_ids: tuple[str, ...]
    r: np.ndarray        # NaN where <2 complete pairs or a constant column
    n_pairs: np.ndarray  # complete-pair counts

    def pair(self, a: str, b: str) -> float:
        return float(self.r[self.query_ids.index(a), self.query_ids.index(b)])


def pearson_matrix(panel: StatePanel) -> CorrelationMatrix:
    """Pairwise-complete Pearson correlation across query columns.

    Each r[i, j] uses only the states where both queries are present. Cells
    with fewer than two complete pairs, or where either column is constant
    over the complete pairs, carry a NaN marker. Diagonal cells are 1 for any
    query with at least two present values.
    """
    v = panel.values
    n_q = len(panel.query_ids)
    r = np.full((n_q, n_q), np.nan)
    n_pairs = np.zeros((n_q, n_q), dtype=int)
    present = ~np.isnan(v)
    for i in range(n_q):
        n_pairs[i, i] = int(present[:, i].sum())
        if n_pairs[i, i] >= 2:
            r[i, i] = 1.0
    for i in range(n_q):
        for j in range(i + 1, n_q):
            both = present[:, i] & present[:, j]
            n = int(both.sum())
            n_pairs[i, j] = n_pairs[j, i] = n
            if n < 2:
                continue
            x = v[both, i]
            y = v[both, j]
            xc = x - x.mean()
            yc = y - y.mean()
            sx = float(np.dot(xc, xc))
            sy = float(np.dot(yc, yc))
            if sx == 0.0 or sy == 0.0:
                continue
            r[i, j] = r[j, i] = float(np.dot(xc, yc)) / np.sqrt(sx * sy)
    return CorrelationMatrix(query_ids=panel.query_ids, r=r, n_pairs=n_pairs)


def classify_band(r: float) -> str:
    """Band the magnitude of a correlation: [0,0.4) low, [0.4,0.6) moderate, [0.6,1] high."""
    mag = abs(r)
    if mag > 1.0 + 1e-12:
        raise OutOfRange(f"|r| = {mag} exceeds 1")
    mag = min(mag, 1.0)
    if mag < 0.4:
        return "low"
    if mag < 0.6:
        return "moderate"
    return "high"


@dataclass(frozen=True)
class Component:
    loadings: tuple[float, ...]
    explained_variance_ratio: float
    scores: tuple[float, ...]
    unstable: bool = False


@dataclass(frozen=True)
class PcaResult:
    query_ids: tuple[str, ...]
    states: tuple[str, ...]
    components: tuple[Component, ...]
    standardization: str = "zscore"

    def loading_matrix(self) -> np.ndarray:
        return np.array([c.loadings for c in self.components]).T

    def score_matrix(self) -> np.ndarray:
        return np.array([c.scores for c in self.components]).T


def zscore_columns(values: np.ndarray, query_ids: Sequence[str]) -> np.ndarray:
    means = values.mean(axis=0)
    stds = values.std(axis=0, ddof=1)
    flat = np.where(stds == 0.0)[0]
    if flat.size:
        raise ConstantColumn(f"query {query_ids[flat[0]]!r} is constant across states")
    return (values - means) / stds


def pca(panel: StatePanel, k: int) -> PcaResult:
    """Correlation-matrix PCA of a complete panel.

    Columns are z-scored (sample std), so the eigendecomposition runs on the
    correlation matrix of the queries. Each component is oriented so its
    largest-magnitude loading is positive, which pins the sign ambiguity of
    the eigensolver. Components separated by a near-zero relative eigenvalue
    gap are flagged unstable rather than trusted for ordering.
    """
    if np.isnan(panel.values).any():
        raise ValueError("panel has missing cells; run drop_incomplete_queries first")
    n_states, n_queries = panel.values.shape
    max_k = min(n_states - 1, n_queries)
    if k > max_k:
        raise KTooLarge(f"k={k} exceeds min(n_states-1, n_queries)={max_k}")
    z = zscore_columns(panel.values, panel.query_ids)
    corr = (z.T @ z) / (n_states - 1)
    corr = (corr + corr.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(corr)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order][:max_k]
    eigvecs = eigvecs[:, order][:, :max_k]
    eigvals = np.clip(eigvals, 0.0, None)
    total = float(eigvals.sum())
    components = []
    for idx in range(k):
        vec = eigvecs[:, idx]
        anchor = int(np.argmax(np.abs(vec)))
        if vec[anchor] < 0:
            vec = -vec
        scores = z @ vec
        gap_ok = True
        for neighbor in (idx - 1, idx + 1):
            if 0 <= neighbor < max_k:
                denom = max(abs(eigvals[idx]), np.finfo(float).tiny)
                if abs(eigvals[idx] - eigvals[neighbor]) / denom < EIGENGAP_STABILITY:
                    gap_ok = False
        components.append(Component(
            loadings=tuple(float(x) for x in vec),
            explained_variance_ratio=float(eigvals[idx] / total),
            scores=tuple(float(s) for s in scores),
            unstable=not gap_ok,
        ))
    return PcaResult(query_ids=panel.query_ids, states=panel.states, components=tuple(components))


@dataclass(frozen=True)
class ComponentInterpretation:
    component_index: int
    salient: tuple[tuple[str, float], ...]      # (query_id, loading), |loading| >= threshold
    top_states: tuple[tuple[str, float], ...]   # descending score
    label: str | None = None


def interpret_component(result: PcaResult, component_index: int,
                        threshold: float = 0.2, n_top_states: int = 5,
                        label: str | None = None) -> ComponentInterpretation:
    if not 0 <= component_index < len(result.components):
        raise BadIndex(f"component {component_index} out of range "
                       f"(result has {len(result.components)})")
    comp = result.components[component_index]
    salient = [(q, l) for q, l in zip(result.query_ids, comp.loadings) if abs(l) >= threshold]
    salient.sort(key=lambda item: -abs(item[1]))
    ranked = sorted(zip(result.states, comp.scores), key=lambda item: -item[1])
    return ComponentInterpretation(
        component_index=component_index,
        salient=tuple(salient),
        top_states=tuple(ranked[:n_top_states]),
        label=label,
    )
