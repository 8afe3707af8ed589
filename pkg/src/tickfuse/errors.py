"""Shared exception base so callers (and the CLI) can catch domain errors in one place."""


class TickfuseError(Exception):
    """Base class for all domain errors raised by this package."""
