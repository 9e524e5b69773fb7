"""Exception types shared across the package."""

from __future__ import annotations


class ParseError(Exception):
    """Malformed config or stream text; carries a line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidJoinTree(Exception):
    """Declared join tree violates the attribute-connectedness requirement."""


class UnknownRelation(Exception):
    """A config or stream references a relation that was never declared."""


class UnsupportedAttributes(Exception):
    """Projection asked for attributes outside the tuple's support."""


class MissingIndex(Exception):
    """Semi-join lookup on a key with no registered hash index."""


class CapExceeded(Exception):
    """Brute-force oracle refused an instance above its size cap."""


class PrimaryKeyViolation(Exception):
    """Two parent tuples arrived with the same foreign-key value."""


class PositionOutOfRange(Exception):
    """Batch retrieve position at or past the batch size."""


class BudgetExceeded(Exception):
    """A benchmark run went past its configured wall-clock budget."""
