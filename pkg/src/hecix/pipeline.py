"""The question-answering loop.

One traversal: question + schema prompt -> backend -> query text ->
sanitize/validate (with bounded repair re-prompts) -> evaluate -> result
table ("full context") -> backend -> human-readable answer.

The sanitizer is the safety gate: query text comes from a language model,
so anything mutation-shaped is rejected outright and a result cap is
enforced before evaluation.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .backends import LlmBackend
from .cypher import QueryAst, evaluate, parse, render, validate
from .cypher.lexer import tokenize
from .cypher.table import ResultTable, format_table
from .errors import BackendError, CypherError, ForbiddenClause
from .graph import PropertyGraph
from .schema import GraphSchema

log = logging.getLogger(__name__)

FORBIDDEN_TOKENS = frozenset(
    {"CREATE", "MERGE", "SET", "DELETE", "REMOVE", "DROP", "CALL", "LOAD"}
)

DEFAULT_LIMIT = 50
DEFAULT_ROW_CAP = 50
DEFAULT_MAX_REPAIRS = 2

SYSTEM_CYPHER = "You translate research questions into graph queries."
SYSTEM_ANSWER = "You explain graph query results to clinical researchers."

STATUS_SUCCESS = "success"
STATUS_EXHAUSTED = "exhausted_repairs"
STATUS_BACKEND_ERROR = "backend_error"


# -- templates -----------------------------------------------------------------


def _fill(template: str, **values: str) -> str:
    # single pass so placeholder-like text inside values is never re-expanded
    pattern = "|".join(re.escape("{" + key + "}") for key in values)
    return re.sub(pattern, lambda m: values[m.group(0)[1:-1]], template)


@dataclass
class PromptTemplate:
    cypher_generation: str
    answer_synthesis: str
    repair: str

    _REQUIRED = {
        "cypher_generation": ("{schema}", "{question}"),
        "answer_synthesis": ("{question}", "{context}"),
        "repair": ("{question}", "{bad_query}", "{error}"),
    }

    def __post_init__(self) -> None:
        for name, placeholders in self._REQUIRED.items():
            text = getattr(self, name)
            for placeholder in placeholders:
                count = text.count(placeholder)
                if count != 1:
                    raise ValueError(
                        f"template {name!r} must contain {placeholder} exactly once, "
                        f"found {count}"
                    )

    @classmethod
    def load(cls, directory: Optional[Path] = None) -> "PromptTemplate":
        """Read the three template files from a directory or package data."""
        if directory is not None:
            base = Path(directory)
            read = lambda name: (base / f"{name}.txt").read_text(encoding="utf-8")
        else:
            ref = resources.files("hecix").joinpath("templates")
            read = lambda name: ref.joinpath(f"{name}.txt").read_text(encoding="utf-8")
        return cls(
            cypher_generation=read("cypher_generation"),
            answer_synthesis=read("answer_synthesis"),
            repair=read("repair"),
        )


# -- exchange record ---------------------------------------------------------------


@dataclass
class Attempt:
    query_text: str
    outcome: str  # "ok" or the failure description fed back into repair


@dataclass
class QaExchange:
    question: str
    attempts: list[Attempt] = field(default_factory=list)
    executed_query: Optional[QueryAst] = None
    context: Optional[ResultTable] = None
    context_row_cap: int = DEFAULT_ROW_CAP
    answer: str = ""
    status: str = STATUS_EXHAUSTED
    error: str = ""
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def cypher(self) -> str:
        return render(self.executed_query) if self.executed_query else ""

    def context_text(self) -> str:
        if self.context is None:
            return ""
        return format_context(self.context, self.context_row_cap)

    def to_dict(self, include_timings: bool = True) -> dict:
        payload = {
            "question": self.question,
            "status": self.status,
            "answer": self.answer,
            "cypher": self.cypher,
            "context_rows": len(self.context.rows) if self.context else 0,
            "context": {
                "columns": self.context.columns if self.context else [],
                "rows": [list(row) for row in self.context.rows] if self.context else [],
            },
            "attempts": [
                {"query": attempt.query_text, "outcome": attempt.outcome}
                for attempt in self.attempts
            ],
            "error": self.error,
        }
        if include_timings:
            payload["timings"] = self.timings
        return payload


# -- pipeline stages ------------------------------------------------------------------


def render_schema(graph: PropertyGraph) -> str:
    """The schema text included in generation prompts."""
    return GraphSchema.from_graph(graph).render()


_FENCE = re.compile(r"^```[A-Za-z]*\n(.*?)\n?```\s*$", re.DOTALL)


def strip_code_fence(text: str) -> str:
    stripped = text.strip()
    matched = _FENCE.match(stripped)
    if matched:
        return matched.group(1).strip()
    return stripped


def generate_cypher(
    backend: LlmBackend, template: str, schema_text: str, question: str
) -> str:
    """One raw completion, with surrounding code fences removed."""
    user = _fill(template, schema=schema_text, question=question)
    return strip_code_fence(backend.complete(SYSTEM_CYPHER, user))


def sanitize(query_text: str, default_limit: int = DEFAULT_LIMIT) -> QueryAst:
    """Parse untrusted query text, rejecting anything mutation-shaped.

    Raises ForbiddenClause before attempting a parse, so a blocked keyword
    is reported even when the rest of the text would not parse.  A missing
    LIMIT is replaced by the default cap.
    """
    for token in tokenize(query_text):
        if token.kind == "IDENT" and str(token.value).upper() in FORBIDDEN_TOKENS:
            raise ForbiddenClause(str(token.value).upper())
    ast = parse(query_text)
    if ast.limit is None:
        ast.limit = default_limit
    return ast


def format_context(table: ResultTable, row_cap: int = DEFAULT_ROW_CAP) -> str:
    """Deterministic text form of the result table handed to the backend."""
    return format_table(table, row_cap=row_cap)


def ask(
    backend: LlmBackend,
    graph: PropertyGraph,
    templates: PromptTemplate,
    question: str,
    max_repairs: int = DEFAULT_MAX_REPAIRS,
    context_row_cap: int = DEFAULT_ROW_CAP,
    default_limit: int = DEFAULT_LIMIT,
) -> QaExchange:
    """Run the full loop; failures land in the exchange status, not raises.

    The exchange always comes back populated enough for the caller to build
    a report: every generation attempt is recorded with its outcome, and
    ``status`` distinguishes success, exhausted repairs, and backend failure.
    """
    started = time.perf_counter()
    exchange = QaExchange(question=question, context_row_cap=context_row_cap)
    schema = GraphSchema.from_graph(graph)
    schema_text = schema.render()

    user_prompt = _fill(
        templates.cypher_generation, schema=schema_text, question=question
    )
    ast: Optional[QueryAst] = None
    generation_time = 0.0
    for attempt_index in range(1 + max_repairs):
        begin = time.perf_counter()
        try:
            raw = backend.complete(SYSTEM_CYPHER, user_prompt)
        except BackendError as exc:
            generation_time += time.perf_counter() - begin
            exchange.attempts.append(Attempt("", f"BackendError: {exc}"))
            exchange.status = STATUS_BACKEND_ERROR
            exchange.error = str(exc)
            exchange.timings = {"generate": generation_time, "total": time.perf_counter() - started}
            return exchange
        generation_time += time.perf_counter() - begin
        query_text = strip_code_fence(raw)

        failure = ""
        try:
            candidate = sanitize(query_text, default_limit=default_limit)
        except (CypherError, ForbiddenClause) as exc:
            failure = f"{type(exc).__name__}: {exc}"
        else:
            blocking = [
                warning
                for warning in validate(candidate, schema)
                if warning.kind in ("unknown_label", "unknown_rel_type")
            ]
            if blocking:
                failure = "; ".join(str(warning) for warning in blocking)
            else:
                exchange.attempts.append(Attempt(query_text, "ok"))
                ast = candidate
                break

        exchange.attempts.append(Attempt(query_text, failure))
        log.info("attempt %d rejected: %s", attempt_index + 1, failure)
        if attempt_index < max_repairs:
            user_prompt = _fill(
                templates.repair,
                question=question,
                bad_query=query_text,
                error=failure,
            )

    exchange.timings["generate"] = generation_time
    if ast is None:
        exchange.status = STATUS_EXHAUSTED
        exchange.error = exchange.attempts[-1].outcome if exchange.attempts else ""
        exchange.timings["total"] = time.perf_counter() - started
        return exchange

    begin = time.perf_counter()
    exchange.executed_query = ast
    exchange.context = evaluate(graph, ast)
    exchange.timings["evaluate"] = time.perf_counter() - begin

    begin = time.perf_counter()
    context_text = format_context(exchange.context, context_row_cap)
    synthesis_prompt = _fill(
        templates.answer_synthesis, question=question, context=context_text
    )
    try:
        exchange.answer = backend.complete(SYSTEM_ANSWER, synthesis_prompt).strip()
    except BackendError as exc:
        exchange.status = STATUS_BACKEND_ERROR
        exchange.error = str(exc)
        exchange.answer = ""
        exchange.timings["synthesize"] = time.perf_counter() - begin
        exchange.timings["total"] = time.perf_counter() - started
        return exchange
    exchange.timings["synthesize"] = time.perf_counter() - begin

    exchange.status = STATUS_SUCCESS
    if not exchange.answer:
        # invariant: a successful exchange carries a non-empty answer
        exchange.answer = "(the model returned an empty answer)"
    exchange.timings["total"] = time.perf_counter() - started
    return exchange


__all__ = [
    "Attempt",
    "DEFAULT_LIMIT",
    "DEFAULT_MAX_REPAIRS",
    "DEFAULT_ROW_CAP",
    "FORBIDDEN_TOKENS",
    "PromptTemplate",
    "QaExchange",
    "STATUS_BACKEND_ERROR",
    "STATUS_EXHAUSTED",
    "STATUS_SUCCESS",
    "ask",
    "format_context",
    "generate_cypher",
    "render_schema",
    "sanitize",
    "strip_code_fence",
]
