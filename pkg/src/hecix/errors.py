"""Exception hierarchy shared across the package."""

from __future__ import annotations


class HecixError(Exception):
    """Base class for every error raised by this package."""


# --------------------------------------------------------------------------
# Graph store


class GraphError(HecixError):
    pass


class EmptyLabel(GraphError):
    """A node label or relationship type was empty."""


class IdCollision(GraphError):
    """An explicitly supplied id is already taken."""


class DanglingEndpoint(GraphError):
    """An edge references a node id that does not exist."""


class NotFound(GraphError):
    """Lookup of a node or edge id failed."""


class SnapshotCorrupt(GraphError):
    """A snapshot file could not be decoded."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# --------------------------------------------------------------------------
# Query language


class CypherError(HecixError):
    pass


class LexError(CypherError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class ParseError(CypherError):
    def __init__(self, expected: str, found: str, position: int):
        super().__init__(f"expected {expected}, found {found} at offset {position}")
        self.expected = expected
        self.found = found
        self.position = position


class UnboundVariable(CypherError):
    def __init__(self, name: str):
        super().__init__(f"variable '{name}' is not bound by any pattern")
        self.name = name


class EvalError(CypherError):
    """Raised for type-mismatched comparisons in strict mode only."""


class SizeLimit(CypherError):
    """The brute-force matcher refuses graphs beyond its size bound."""


# --------------------------------------------------------------------------
# Ingestion


class IngestError(HecixError):
    pass


class MalformedRecord(IngestError):
    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{message}{f' ({where})' if where else ''}")
        self.where = where


class UnknownKind(IngestError):
    """A source record carries a node kind outside the known vocabulary."""


class DiseaseNotFound(IngestError):
    def __init__(self, name: str, candidates: list[str]):
        hint = f"; nearest names: {', '.join(candidates)}" if candidates else ""
        super().__init__(f"disease '{name}' not found in source{hint}")
        self.name = name
        self.candidates = candidates


class MissingField(IngestError):
    def __init__(self, field: str):
        super().__init__(f"required field '{field}' is missing or unusable")
        self.field = field


# --------------------------------------------------------------------------
# Pipeline and backends


class PipelineError(HecixError):
    pass


class ForbiddenClause(PipelineError):
    def __init__(self, token: str):
        super().__init__(f"query contains forbidden clause {token}")
        self.token = token


class ExhaustedRepairs(PipelineError):
    """Every generation attempt failed to produce an executable query."""


class BackendError(HecixError):
    """An LLM backend call failed (timeout, transport, or bad status)."""


# --------------------------------------------------------------------------
# Evaluation


class NotApplicable(HecixError):
    """A metric cannot be computed for this sample (e.g. nothing to score)."""
