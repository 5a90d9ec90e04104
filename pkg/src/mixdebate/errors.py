"""Exception hierarchy shared across the package."""
from __future__ import annotations


class MixDebateError(Exception):
    """Base class for all package errors."""


class KgParseError(MixDebateError):
    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class EntityNotFound(MixDebateError, KeyError):
    def __init__(self, entity: str):
        super().__init__(entity)
        self.entity = entity

    def __str__(self) -> str:
        return f"entity not found: {self.entity}"


class IntegrityError(MixDebateError):
    """A gold-path triple is not present in the graph being degraded."""


class BackendError(MixDebateError):
    """Failure of a remote backend (SPARQL endpoint, embedder, LLM provider)."""

    def __init__(self, message: str, *, status: int | None = None, retriable: bool = True):
        super().__init__(message)
        self.status = status
        self.retriable = retriable


class ProviderError(BackendError):
    """LLM provider failure. ``retriable`` is false once attempts are exhausted."""


class ScriptExhausted(ProviderError):
    def __init__(self, role: str):
        super().__init__(f"scripted provider has no responses left for role {role!r}", retriable=False)
        self.role = role


class SchemaError(MixDebateError):
    """LLM output did not satisfy the role's output schema, even after a reprompt."""

    def __init__(self, role: str, reason: str, raw: str = ""):
        super().__init__(f"{role}: {reason}")
        self.role = role
        self.reason = reason
        self.raw = raw


class DatasetError(MixDebateError):
    pass


class ConfigError(MixDebateError):
    pass
