"""Software metadata observatory: ingest registry dumps, normalize and enrich
records, resolve tool identities, score FAIRness, and serve the results."""

__version__ = "0.1.0"
