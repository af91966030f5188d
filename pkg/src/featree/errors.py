"""Exception hierarchy shared across the toolkit.

Every error that can cross the HTTP boundary carries a machine ``code``
so the server can map it onto a structured ApiError body.
"""
from __future__ import annotations


class FeatreeError(Exception):
    """Base class for all toolkit errors."""

    code = "validation"


class ValidationError(FeatreeError):
    code = "validation"


class NotFoundError(FeatreeError):
    code = "not_found"


class ConflictError(FeatreeError):
    code = "conflict"


class ProviderError(FeatreeError):
    """All attempts against a chat provider failed; ``cause`` keeps the last one."""

    code = "provider_failure"

    def __init__(self, message: str, cause: Exception | None = None) -> None:
        super().__init__(message)
        self.cause = cause


class RenderError(ValidationError):
    """A prompt template was rendered with a missing or unresolved placeholder."""


class ParseError(FeatreeError):
    """No JSON feature list could be recovered from model output.

    The raw text is preserved for post-mortems and transcript triage.
    """

    code = "provider_failure"

    def __init__(self, message: str, raw: str) -> None:
        super().__init__(message)
        self.raw = raw


class EmptyRetrievalError(FeatreeError):
    """A corpus-grounded refinement found nothing to ground on."""

    code = "empty_retrieval"


class SelectionError(FeatreeError):
    """Sub-feature selection produced no traceable items."""

    code = "provider_failure"
