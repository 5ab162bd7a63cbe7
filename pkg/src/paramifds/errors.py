"""Exception types raised across the package."""

from __future__ import annotations


class IfdsError(Exception):
    """Base class for every error raised by paramifds."""


class ParseError(IfdsError):
    """The arena document is not well-formed JSON or has the wrong shape."""


class ValidationError(IfdsError):
    """The arena document parsed but violates an arena invariant."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class DomainMismatch(IfdsError):
    pass


class DecompositionMismatch(IfdsError):
    pass


class DifferentTrees(IfdsError):
    pass


class UnknownVertex(IfdsError):
    pass


class IndexMismatch(IfdsError):
    pass


class CorruptIndex(IfdsError):
    pass


class VersionMismatch(CorruptIndex):
    pass


class FingerprintMismatch(IndexMismatch):
    pass


class BoundExceeded(IfdsError):
    """The explicit-state oracle ran out of its configuration budget."""


class InfeasibleSpec(IfdsError):
    pass


class EngineDisagreement(IfdsError):
    def __init__(self, query, answers: dict[str, bool]):
        self.query = query
        self.answers = answers
        shown = ", ".join(f"{k}={v}" for k, v in sorted(answers.items()))
        super().__init__(f"engines disagree on {query}: {shown}")
