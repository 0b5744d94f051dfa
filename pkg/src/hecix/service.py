"""HTTP face of the pipeline: one immutable snapshot, stateless requests.

Endpoints:

* ``GET  /health`` -> ``{"status", "nodes", "edges"}``
* ``GET  /schema`` -> plain-text schema
* ``GET  /stats``  -> merge report summary (or bare counts)
* ``POST /cypher`` ``{"query": ...}`` -> ``{"columns", "rows"}`` (sanitized)
* ``POST /ask``    ``{"question": ...}`` -> answer payload

Errors carry a machine-readable ``code`` and, where applicable, the attempt
log: 400 for parse/forbidden-clause failures, 422 for exhausted repairs,
502 for backend failures.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .backends import BackendConfig, HttpBackend, LlmBackend, MockBackend
from .cypher import evaluate
from .errors import CypherError, ForbiddenClause
from .graph import PropertyGraph, snapshot_load
from .pipeline import (
    DEFAULT_MAX_REPAIRS,
    DEFAULT_ROW_CAP,
    PromptTemplate,
    STATUS_BACKEND_ERROR,
    STATUS_SUCCESS,
    ask,
    render_schema,
    sanitize,
)

log = logging.getLogger(__name__)


@dataclass
class ServiceConfig:
    snapshot: Path
    bind: str = "127.0.0.1"
    port: int = 8080
    max_repairs: int = DEFAULT_MAX_REPAIRS
    context_row_cap: int = DEFAULT_ROW_CAP
    template_dir: Optional[Path] = None
    mock_fixture: Optional[Path] = None
    backend_config: Optional[BackendConfig] = None


@dataclass
class _State:
    graph: PropertyGraph
    backend: LlmBackend
    templates: PromptTemplate
    schema_text: str
    report: Optional[dict] = None
    max_repairs: int = DEFAULT_MAX_REPAIRS
    context_row_cap: int = DEFAULT_ROW_CAP
    lock: threading.Lock = field(default_factory=threading.Lock)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    state: _State  # set by the factory

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), fmt % args)

    # -- plumbing ---------------------------------------------------------

    def _send(self, status: int, payload: dict | str, content_type: str = "application/json") -> None:
        if isinstance(payload, str):
            body = payload.encode("utf-8")
        else:
            body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type + "; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> Optional[dict]:
        length = int(self.headers.get("Content-Length", "0") or "0")
        raw = self.rfile.read(length) if length else b""
        try:
            payload = json.loads(raw.decode("utf-8")) if raw else {}
        except (UnicodeDecodeError, json.JSONDecodeError):
            self._send(400, {"code": "bad_request", "error": "body must be JSON"})
            return None
        if not isinstance(payload, dict):
            self._send(400, {"code": "bad_request", "error": "body must be an object"})
            return None
        return payload

    # -- GET ----------------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802 (http.server API)
        state = self.state
        if self.path == "/health":
            stats = state.graph.stats()
            self._send(200, {"status": "ok", "nodes": stats.nodes, "edges": stats.edges})
        elif self.path == "/schema":
            self._send(200, state.schema_text, content_type="text/plain")
        elif self.path == "/stats":
            if state.report is not None:
                self._send(200, state.report)
            else:
                stats = state.graph.stats()
                self._send(200, {"nodes": stats.nodes, "edges": stats.edges})
        else:
            self._send(404, {"code": "not_found", "error": f"no route {self.path}"})

    # -- POST ----------------------------------------------------------------

    def do_POST(self) -> None:  # noqa: N802 (http.server API)
        if self.path == "/cypher":
            self._handle_cypher()
        elif self.path == "/ask":
            self._handle_ask()
        else:
            self._send(404, {"code": "not_found", "error": f"no route {self.path}"})

    def _handle_cypher(self) -> None:
        payload = self._read_json()
        if payload is None:
            return
        query = payload.get("query", "")
        if not isinstance(query, str) or not query.strip():
            self._send(400, {"code": "bad_request", "error": "missing 'query'"})
            return
        try:
            ast = sanitize(query)
        except ForbiddenClause as exc:
            self._send(400, {"code": "forbidden_clause", "error": str(exc)})
            return
        except CypherError as exc:
            self._send(400, {"code": "parse_error", "error": str(exc)})
            return
        table = evaluate(self.state.graph, ast)
        self._send(
            200,
            {"columns": table.columns, "rows": [list(row) for row in table.rows]},
        )

    def _handle_ask(self) -> None:
        payload = self._read_json()
        if payload is None:
            return
        question = payload.get("question", "")
        if not isinstance(question, str) or not question.strip():
            self._send(400, {"code": "bad_request", "error": "missing 'question'"})
            return
        state = self.state
        exchange = ask(
            state.backend,
            state.graph,
            state.templates,
            question,
            max_repairs=state.max_repairs,
            context_row_cap=state.context_row_cap,
        )
        body = exchange.to_dict(include_timings=False)
        if exchange.status == STATUS_SUCCESS:
            self._send(200, body)
        elif exchange.status == STATUS_BACKEND_ERROR:
            body["code"] = "backend_error"
            self._send(502, body)
        else:
            body["code"] = "exhausted_repairs"
            self._send(422, body)


def build_server(
    graph: PropertyGraph,
    backend: LlmBackend,
    templates: Optional[PromptTemplate] = None,
    bind: str = "127.0.0.1",
    port: int = 0,
    report: Optional[dict] = None,
    max_repairs: int = DEFAULT_MAX_REPAIRS,
    context_row_cap: int = DEFAULT_ROW_CAP,
) -> ThreadingHTTPServer:
    """Wire a server around an already-loaded graph (port 0 = ephemeral)."""
    state = _State(
        graph=graph,
        backend=backend,
        templates=templates or PromptTemplate.load(),
        schema_text=render_schema(graph),
        report=report,
        max_repairs=max_repairs,
        context_row_cap=context_row_cap,
    )
    handler = type("Handler", (_Handler,), {"state": state})
    return ThreadingHTTPServer((bind, port), handler)


def serve(config: ServiceConfig) -> None:
    """Load the snapshot and serve until interrupted."""
    graph = snapshot_load(config.snapshot)
    backend: LlmBackend
    if config.mock_fixture is not None:
        backend = MockBackend.from_file(config.mock_fixture)
    else:
        backend = HttpBackend(config.backend_config or BackendConfig.from_env())
    report = None
    report_path = Path(str(config.snapshot) + ".report.json")
    if report_path.exists():
        report = json.loads(report_path.read_text(encoding="utf-8"))
    templates = PromptTemplate.load(config.template_dir)
    server = build_server(
        graph,
        backend,
        templates,
        bind=config.bind,
        port=config.port,
        report=report,
        max_repairs=config.max_repairs,
        context_row_cap=config.context_row_cap,
    )
    host, port = server.server_address[:2]
    stats = graph.stats()
    log.info(
        "serving %d nodes / %d edges on http://%s:%d", stats.nodes, stats.edges, host, port
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
