"""infoveil: search-trend infoveillance analytics over relative search volumes."""

__version__ = "0.1.0"
