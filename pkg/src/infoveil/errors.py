"""Exception hierarchy shared across the package.

Every error raised by infoveil code derives from InfoveilError so callers
(CLI, service) can map failures to exit codes / HTTP statuses in one place.
"""


class InfoveilError(Exception):
    """Base class for all infoveil errors."""

    code = "error"


# -- query expressions / catalog ------------------------------------------

class EmptyExpression(InfoveilError):
    code = "empty_expression"


class TooManyTerms(InfoveilError):
    code = "too_many_terms"


class DuplicateTerm(InfoveilError):
    code = "duplicate_term"


class CatalogParseError(InfoveilError):
    code = "catalog_parse_error"


class InvariantViolation(InfoveilError):
    code = "invariant_violation"


class UnknownQuery(InfoveilError):
    code = "unknown_query"


# -- acquisition ------------------------------------------------------------

class SourceUnavailable(InfoveilError):
    code = "source_unavailable"


class MalformedResponse(InfoveilError):
    code = "malformed_response"


class RateLimited(InfoveilError):
    code = "rate_limited"


class SchemaMismatch(InfoveilError):
    code = "schema_mismatch"


class NonMonotonicDates(InfoveilError):
    code = "non_monotonic_dates"


class NegativeValue(InfoveilError):
    code = "negative_value"


# -- snapshot store ----------------------------------------------------------

class CorruptSnapshot(InfoveilError):
    code = "corrupt_snapshot"


class SnapshotNotFound(InfoveilError):
    code = "snapshot_not_found"


# -- analytics ---------------------------------------------------------------

class EmptyPanel(InfoveilError):
    code = "empty_panel"


class EmptyWindow(InfoveilError):
    code = "empty_window"


class AllQueriesDropped(InfoveilError):
    code = "all_queries_dropped"


class OutOfRange(InfoveilError):
    code = "out_of_range"


class ConstantColumn(InfoveilError):
    code = "constant_column"


class KTooLarge(InfoveilError):
    code = "k_too_large"


class BadIndex(InfoveilError):
    code = "bad_index"


# -- lead/lag ----------------------------------------------------------------

class TooShort(InfoveilError):
    code = "too_short"


class InsufficientBaseline(InfoveilError):
    code = "insufficient_baseline"


class InsufficientOverlap(InfoveilError):
    code = "insufficient_overlap"


class ConstantSeries(InfoveilError):
    code = "constant_series"


class NoValidLag(InfoveilError):
    code = "no_valid_lag"


class EmptySeries(InfoveilError):
    code = "empty_series"


# -- geography ----------------------------------------------------------------

class UnknownGeography(InfoveilError):
    code = "unknown_geography"


# -- watchlist ----------------------------------------------------------------

class VersionConflict(InfoveilError):
    code = "version_conflict"
