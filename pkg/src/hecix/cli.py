"""Command-line operator surface.

Subcommands: ``ingest`` (build and snapshot the graph), ``query`` (run one
query against a snapshot), ``ask`` (full question-answering loop), ``eval``
(score a suite and write report files + figure), ``serve`` (HTTP service).

Backend credentials are read from the environment only (HECIX_LLM_ENDPOINT,
HECIX_LLM_MODEL, HECIX_LLM_KEY, HECIX_LLM_TIMEOUT_S); they never appear on
the command line or in logs.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from .backends import BackendConfig, HttpBackend, LlmBackend, MockBackend
from .cypher import evaluate, format_table, parse
from .errors import BackendError, CypherError, HecixError
from .evalkit import LlmJudge, MockJudge, evaluate_suite, load_suite
from .graph import snapshot_load, snapshot_save
from .ingest import default_disease_specs, load_disease_specs, run_ingestion
from .pipeline import (
    DEFAULT_MAX_REPAIRS,
    DEFAULT_ROW_CAP,
    PromptTemplate,
    STATUS_BACKEND_ERROR,
    STATUS_SUCCESS,
    ask,
)
from .service import ServiceConfig, serve

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_MISSING_INPUT = 2
EXIT_PARSE_ERROR = 3
EXIT_BACKEND_ERROR = 4


def _require_file(path: Optional[str], what: str) -> Path:
    if path is None:
        print(f"error: missing {what}", file=sys.stderr)
        raise SystemExit(EXIT_MISSING_INPUT)
    resolved = Path(path)
    if not resolved.exists():
        print(f"error: {what} not found: {resolved}", file=sys.stderr)
        raise SystemExit(EXIT_MISSING_INPUT)
    return resolved


def _make_backend(args: argparse.Namespace) -> LlmBackend:
    if getattr(args, "mock_backend", None):
        return MockBackend.from_file(_require_file(args.mock_backend, "mock fixture"))
    try:
        return HttpBackend(BackendConfig.from_env())
    except BackendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_MISSING_INPUT)


# -- subcommands ----------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    hetionet_path = _require_file(args.hetionet, "--hetionet export")
    if args.diseases:
        specs = load_disease_specs(_require_file(args.diseases, "--diseases file"))
    else:
        specs = default_disease_specs()
    ctgov_dir = None
    if args.ctgov_dir:
        ctgov_dir = _require_file(args.ctgov_dir, "--ctgov-dir directory")
    nct_ids = None
    if args.nct_list:
        nct_path = _require_file(args.nct_list, "--nct-list file")
        nct_ids = {
            line.strip()
            for line in nct_path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        }
    try:
        graph, report = run_ingestion(
            hetionet_path,
            specs,
            radius=args.radius,
            ctgov_dir=ctgov_dir,
            ctgov_fetch=args.ctgov_fetch,
            nct_ids=nct_ids,
            per_disease_limit=args.per_disease,
        )
    except HecixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    snapshot = Path(args.snapshot)
    snapshot.parent.mkdir(parents=True, exist_ok=True)
    snapshot_save(graph, snapshot)
    Path(str(snapshot) + ".report.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    Path(str(snapshot) + ".report.tsv").write_text(report.to_tsv(), encoding="utf-8")
    from .figures import save_merge_figure

    save_merge_figure(report, str(snapshot) + ".report.png")
    print(report.to_text(), end="")
    print(f"snapshot written to {snapshot}")
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    snapshot = _require_file(args.snapshot, "--snapshot file")
    graph = snapshot_load(snapshot)
    try:
        ast = parse(args.query)
    except CypherError as exc:
        position = getattr(exc, "position", None)
        where = f" (offset {position})" if position is not None else ""
        print(f"query error: {exc}{where}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    table = evaluate(graph, ast)
    print(format_table(table))
    return EXIT_OK


def cmd_ask(args: argparse.Namespace) -> int:
    snapshot = _require_file(args.snapshot, "--snapshot file")
    graph = snapshot_load(snapshot)
    backend = _make_backend(args)
    templates = PromptTemplate.load(Path(args.templates) if args.templates else None)
    exchange = ask(
        backend,
        graph,
        templates,
        args.question,
        max_repairs=args.max_repairs,
        context_row_cap=args.row_cap,
    )
    if args.trace:
        print(json.dumps(exchange.to_dict(include_timings=False), indent=2))
    else:
        print(exchange.answer if exchange.status == STATUS_SUCCESS else f"[{exchange.status}] {exchange.error}")
    if exchange.status == STATUS_BACKEND_ERROR:
        return EXIT_BACKEND_ERROR
    if exchange.status != STATUS_SUCCESS:
        return EXIT_FAILURE
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    snapshot = _require_file(args.snapshot, "--snapshot file")
    suite_path = _require_file(args.suite, "--suite file")
    samples = load_suite(suite_path)

    pipeline = None
    judge = MockJudge()
    if args.mock_backend or args.live:
        graph = snapshot_load(snapshot)
        backend = _make_backend(args)
        templates = PromptTemplate.load(Path(args.templates) if args.templates else None)
        if args.live:
            judge = LlmJudge(backend)

        def pipeline(question: str):
            return ask(
                backend,
                graph,
                templates,
                question,
                max_repairs=args.max_repairs,
                context_row_cap=args.row_cap,
            )

    report = evaluate_suite(judge, samples, pipeline=pipeline, max_workers=args.workers)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.tsv").write_text(report.to_tsv(), encoding="utf-8")
    (out_dir / "metrics_summary.json").write_text(
        json.dumps(report.summary_dict(), indent=2) + "\n", encoding="utf-8"
    )
    from .figures import save_metrics_figure

    save_metrics_figure(report, out_dir / "metrics.png")
    print(report.to_table_text(), end="")
    print(f"report files written to {out_dir}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    snapshot = _require_file(args.snapshot, "--snapshot file")
    host, _, port_text = args.bind.rpartition(":")
    if not host or not port_text.isdigit():
        print(f"error: --bind must be HOST:PORT, got {args.bind!r}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    config = ServiceConfig(
        snapshot=snapshot,
        bind=host,
        port=int(port_text),
        max_repairs=args.max_repairs,
        context_row_cap=args.row_cap,
        template_dir=Path(args.templates) if args.templates else None,
        mock_fixture=Path(args.mock_backend) if args.mock_backend else None,
    )
    if config.mock_fixture is None:
        try:
            config.backend_config = BackendConfig.from_env()
        except BackendError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_MISSING_INPUT
    serve(config)
    return EXIT_OK


# -- argument wiring ---------------------------------------------------------------


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--mock-backend",
        metavar="FIXTURE",
        help="use the deterministic table-driven backend from this JSONL file",
    )
    parser.add_argument("--templates", metavar="DIR", help="prompt template directory")
    parser.add_argument(
        "--max-repairs",
        type=int,
        default=DEFAULT_MAX_REPAIRS,
        help="repair re-prompts after a rejected query (default %(default)s)",
    )
    parser.add_argument(
        "--row-cap",
        type=int,
        default=DEFAULT_ROW_CAP,
        help="result rows forwarded as context (default %(default)s)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hecix",
        description="Embedded biomedical knowledge graph with question answering.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", help="build the graph and write a snapshot")
    ingest.add_argument("--hetionet", metavar="PATH", help="network export (.json/.json.bz2)")
    ingest.add_argument("--ctgov-dir", metavar="DIR", help="offline study documents")
    ingest.add_argument(
        "--ctgov-fetch", action="store_true", help="fetch studies from the registry API"
    )
    ingest.add_argument("--diseases", metavar="FILE", help="disease roster (default: built-in six)")
    ingest.add_argument("--radius", type=int, choices=(1, 2), default=1)
    ingest.add_argument("--nct-list", metavar="FILE", help="pin the study selection to these ids")
    ingest.add_argument(
        "--per-disease", type=int, default=200, help="fetch cap per disease (default %(default)s)"
    )
    ingest.add_argument("--snapshot", required=True, metavar="OUT")
    ingest.set_defaults(func=cmd_ingest)

    query = commands.add_parser("query", help="run one query against a snapshot")
    query.add_argument("--snapshot", required=True)
    query.add_argument("query", metavar="QUERY")
    query.set_defaults(func=cmd_query)

    ask_cmd = commands.add_parser("ask", help="answer a natural-language question")
    ask_cmd.add_argument("--snapshot", required=True)
    ask_cmd.add_argument("question", metavar="QUESTION")
    ask_cmd.add_argument("--trace", action="store_true", help="print the full exchange as JSON")
    _add_backend_flags(ask_cmd)
    ask_cmd.set_defaults(func=cmd_ask)

    eval_cmd = commands.add_parser("eval", help="score a question suite")
    eval_cmd.add_argument("--snapshot", required=True)
    eval_cmd.add_argument("--suite", required=True)
    eval_cmd.add_argument("--out", default="eval_report", help="output directory")
    eval_cmd.add_argument(
        "--live", action="store_true", help="judge with the live backend instead of the mock"
    )
    eval_cmd.add_argument("--workers", type=int, default=1, help="parallel sample scoring")
    _add_backend_flags(eval_cmd)
    eval_cmd.set_defaults(func=cmd_eval)

    serve_cmd = commands.add_parser("serve", help="run the HTTP service")
    serve_cmd.add_argument("--snapshot", required=True)
    serve_cmd.add_argument("--bind", default="127.0.0.1:8080", metavar="HOST:PORT")
    _add_backend_flags(serve_cmd)
    serve_cmd.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except HecixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
