"""Exception types shared across the toolkit."""

from __future__ import annotations


class CuratorError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(CuratorError):
    """Malformed or contract-violating input data.

    ``problems`` lists every issue found, not just the first.
    """

    def __init__(self, message: str, problems: list[str] | None = None):
        super().__init__(message)
        self.problems = problems or [message]


class InferenceError(CuratorError):
    """Transport or protocol failure talking to a model endpoint."""


class ReplayMissError(InferenceError):
    """A replay client was asked for a request it has no recording of."""

    def __init__(self, request_hash: str):
        super().__init__(f"unrecorded request: {request_hash}")
        self.request_hash = request_hash


class JobAborted(CuratorError):
    """A curation job exceeded its failure-rate abort threshold."""
