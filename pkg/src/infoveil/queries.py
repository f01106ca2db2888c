"""Query expressions and the curated monitoring catalog.

A query expression is an OR-combination of up to five phrases joined by '+'.
The bundled catalog carries 39 curated queries over six behavioral themes;
news/media queries additionally carry an audience-ideology tag.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import (
    CatalogParseError,
    DuplicateTerm,
    EmptyExpression,
    InvariantViolation,
    TooManyTerms,
    UnknownQuery,
)

MAX_TERMS = 5


class Theme(str, Enum):
    CARE_SEEKING = "CareSeeking"
    GOVERNMENT_PROGRAMS = "GovernmentPrograms"
    HEALTH_PROGRAMS = "HealthPrograms"
    NEWS_INFLUENCE = "NewsInfluence"
    OUTLOOK_CONCERNS = "OutlookConcerns"
    SOCIAL_TRAVEL = "SocialTravel"


class Ideology(str, Enum):
    LEFT = "Left"
    RIGHT = "Right"
    FAR_RIGHT = "FarRight"


@dataclass(frozen=True)
class QueryExpr:
    """Parsed OR-combination of search phrases."""

    terms: tuple[str, ...]
    canonical_text: str

    def __str__(self) -> str:
        return self.canonical_text


def parse_query_expr(text: str) -> QueryExpr:
    """Split on '+', trim each phrase, and normalize to 'a + b + c' form.

    Duplicate detection is case-insensitive; the original casing of each
    term is kept in the canonical rendering.
    """
    raw_terms = [t.strip() for t in text.split("+")]
    terms = [t for t in raw_terms if t]
    if not terms:
        raise EmptyExpression(f"no search terms in {text!r}")
    if len(terms) > MAX_TERMS:
        raise TooManyTerms(f"{len(terms)} terms, limit is {MAX_TERMS}: {text!r}")
    seen: set[str] = set()
    for term in terms:
        folded = term.casefold()
        if folded in seen:
            raise DuplicateTerm(f"term {term!r} repeated in {text!r}")
        seen.add(folded)
    return QueryExpr(terms=tuple(terms), canonical_text=" + ".join(terms))


@dataclass(frozen=True)
class ThemedQuery:
    id: str
    theme: Theme
    expr: QueryExpr
    ideology: Ideology | None = None


@dataclass(frozen=True)
class Catalog:
    queries: tuple[ThemedQuery, ...]
    version: str

    def __post_init__(self) -> None:
        ids = [q.id for q in self.queries]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise InvariantViolation(f"duplicate catalog ids: {sorted(dupes)}")
        for q in self.queries:
            if q.ideology is not None and q.theme is not Theme.NEWS_INFLUENCE:
                raise InvariantViolation(f"query {q.id}: ideology tag outside NewsInfluence")

    def __len__(self) -> int:
        return len(self.queries)

    @property
    def ids(self) -> list[str]:
        return [q.id for q in self.queries]

    @property
    def themes(self) -> set[Theme]:
        return {q.theme for q in self.queries}

    def get(self, query_id: str) -> ThemedQuery:
        for q in self.queries:
            if q.id == query_id:
                return q
        raise UnknownQuery(f"no catalog entry with id {query_id!r}")

    def __contains__(self, query_id: str) -> bool:
        return any(q.id == query_id for q in self.queries)


BUNDLED_CATALOG_VERSION = "1.0.0"

_EXPR_ERRORS = (EmptyExpression, TooManyTerms, DuplicateTerm)


def _parse_rows(rows: list[dict[str, str]], origin: str, version: str) -> Catalog:
    queries = []
    for lineno, row in enumerate(rows, start=2):
        missing = {"id", "theme", "expr"} - {k for k, v in row.items() if v is not None}
        if missing:
            raise CatalogParseError(f"{origin}:{lineno}: missing columns {sorted(missing)}")
        qid = (row["id"] or "").strip()
        if not qid:
            raise CatalogParseError(f"{origin}:{lineno}: empty id")
        try:
            theme = Theme(row["theme"].strip())
        except ValueError:
            raise CatalogParseError(f"{origin}:{lineno}: unknown theme {row['theme']!r}") from None
        try:
            expr = parse_query_expr(row["expr"])
        except _EXPR_ERRORS as exc:
            raise CatalogParseError(f"{origin}:{lineno}: bad expr for {qid!r}: {exc}") from exc
        ideology_text = (row.get("ideology") or "").strip()
        ideology: Ideology | None = None
        if ideology_text and ideology_text != "None":
            try:
                ideology = Ideology(ideology_text)
            except ValueError:
                raise CatalogParseError(f"{origin}:{lineno}: unknown ideology {ideology_text!r}") from None
        queries.append(ThemedQuery(id=qid, theme=theme, expr=expr, ideology=ideology))
    return Catalog(queries=tuple(queries), version=version)


def load_catalog(source: str | Path | None = None) -> Catalog:
    """Load a catalog file, or the bundled default when no path is given."""
    if source is None:
        text = resources.files("infoveil.data").joinpath("catalog.csv").read_text(encoding="utf-8")
        origin = "bundled catalog"
        version = BUNDLED_CATALOG_VERSION
    else:
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        origin = str(path)
        version = path.stem
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["id", "theme", "expr", "ideology"]:
        raise CatalogParseError(f"{origin}: expected header id,theme,expr,ideology, got {reader.fieldnames}")
    return _parse_rows(list(reader), origin, version)


def write_catalog(catalog: Catalog, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "theme", "expr", "ideology"])
        for q in catalog.queries:
            writer.writerow([q.id, q.theme.value, q.expr.canonical_text, q.ideology.value if q.ideology else ""])
