import pytest

from hecix.backends import MockBackend, MockRule
from hecix.cypher import ResultTable, parse, render
from hecix.errors import BackendError, ForbiddenClause, ParseError
from hecix.graph import PropertyGraph
from hecix.ingest import closed_rel_set
from hecix.pipeline import (
    PromptTemplate,
    STATUS_BACKEND_ERROR,
    STATUS_EXHAUSTED,
    STATUS_SUCCESS,
    ask,
    format_context,
    generate_cypher,
    render_schema,
    sanitize,
    strip_code_fence,
)


class TestRenderSchema:
    def test_empty_graph(self):
        text = render_schema(PropertyGraph())
        assert text == "Node labels:\nRelationships:\n"

    def test_small_fixture(self):
        g = PropertyGraph()
        d = g.add_node("Disease", {"name": "vitiligo"})
        gene = g.add_node("Gene", {"name": "JAK2"})
        g.add_edge("ASSOCIATES_DaG", d, gene)
        text = render_schema(g)
        assert text == (
            "Node labels:\n"
            "  Disease: name\n"
            "  Gene: name\n"
            "Relationships:\n"
            "  (:Disease)-[:ASSOCIATES_DaG]->(:Gene)\n"
        )

    def test_full_closed_set_renders_18_triples(self):
        # one edge per relationship name in the radius-1 closed set
        endpoint_labels = {
            "TREATS_CtD": ("Compound", "Disease"),
            "PALLIATES_CpD": ("Compound", "Disease"),
            "ASSOCIATES_DaG": ("Disease", "Gene"),
            "UPREGULATES_DuG": ("Disease", "Gene"),
            "DOWNREGULATES_DdG": ("Disease", "Gene"),
            "LOCALIZES_DlA": ("Disease", "Anatomy"),
            "PRESENTS_DpS": ("Disease", "Symptom"),
            "RESEMBLES_DrD": ("Disease", "Disease"),
            "STUDIES": ("Study", "Disease"),
            "HAS_CONDITION": ("Study", "Condition"),
            "MAPS_TO": ("Condition", "Disease"),
            "LED_BY": ("Study", "PI"),
            "IN_PHASE": ("Study", "Phase"),
            "CONDUCTED_AT": ("Study", "Location"),
            "USES": ("Study", "Intervention"),
            "ELIGIBLE_AGE": ("Study", "AgeGroup"),
            "ELIGIBLE_SEX": ("Study", "Sex"),
            "AFFILIATED_WITH": ("PI", "Location"),
        }
        assert set(endpoint_labels) == closed_rel_set()
        g = PropertyGraph()
        label_ids: dict[str, int] = {}
        for rel, (src, dst) in sorted(endpoint_labels.items()):
            for label in (src, dst):
                if label not in label_ids:
                    label_ids[label] = g.add_node(label, {"name": label.lower()})
            g.add_edge(rel, label_ids[src], label_ids[dst])
        text = render_schema(g)
        triple_lines = [
            line for line in text.splitlines() if line.startswith("  (:")
        ]
        assert len(triple_lines) == 18

    def test_schema_is_sorted_and_deterministic(self, golden_graph):
        text = render_schema(golden_graph)
        assert text == render_schema(golden_graph)
        triple_lines = [line for line in text.splitlines() if line.startswith("  (:")]
        assert triple_lines == sorted(triple_lines)


class TestStripCodeFence:
    def test_plain_text_untouched(self):
        assert strip_code_fence("MATCH (n) RETURN n") == "MATCH (n) RETURN n"

    def test_fence_removed(self):
        assert strip_code_fence("```\nMATCH (n) RETURN n\n```") == "MATCH (n) RETURN n"

    def test_language_tag_removed(self):
        assert strip_code_fence("```cypher\nMATCH (n) RETURN n\n```") == "MATCH (n) RETURN n"


class TestGenerateCypher:
    def test_canned_completion(self, mock_backend):
        text = generate_cypher(
            mock_backend,
            "Schema:\n{schema}\n\nQuestion: {question}",
            "Node labels:",
            "How many studies investigate vitiligo?",
        )
        assert text == (
            "MATCH (s:Study)-[:STUDIES]->(d:Disease) "
            "WHERE toLower(d.name) = 'vitiligo' RETURN count(s)"
        )

    def test_fenced_completion_unwrapped(self):
        backend = MockBackend(
            rules=[MockRule(("q",), "```cypher\nMATCH (n) RETURN n\n```")]
        )
        assert (
            generate_cypher(backend, "{schema} {question}", "s", "q")
            == "MATCH (n) RETURN n"
        )


class TestSanitize:
    def test_default_limit_injected(self):
        ast = sanitize("MATCH (n:Gene) RETURN n.name")
        assert ast.limit == 50

    def test_existing_limit_kept(self):
        assert sanitize("MATCH (n) RETURN n LIMIT 5").limit == 5

    @pytest.mark.parametrize(
        "text,token",
        [
            ("MATCH (n) DELETE n", "DELETE"),
            ("CREATE (n:X) RETURN n", "CREATE"),
            ("MATCH (n) SET n.x = 1 RETURN n", "SET"),
            ("MERGE (n) RETURN n", "MERGE"),
            ("MATCH (n) REMOVE n.x RETURN n", "REMOVE"),
            ("DROP INDEX foo", "DROP"),
            ("CALL db.labels()", "CALL"),
            ("LOAD CSV FROM 'x' AS row RETURN row", "LOAD"),
        ],
    )
    def test_forbidden_clauses_rejected(self, text, token):
        with pytest.raises(ForbiddenClause) as info:
            sanitize(text)
        assert info.value.token == token

    def test_forbidden_wins_over_parse_error(self):
        # text does not parse in the subset, but the verdict is the clause
        with pytest.raises(ForbiddenClause):
            sanitize("DELETE everything now")

    def test_parse_errors_pass_through(self):
        with pytest.raises(ParseError):
            sanitize("MATCH (n RETURN n")

    def test_quoted_words_are_data_not_clauses(self):
        ast = sanitize("MATCH (n {name: 'DELETE'}) RETURN n")
        assert ast.limit == 50


class TestFormatContext:
    def test_empty_table_is_header_only(self):
        table = ResultTable(columns=["a", "b"], rows=[])
        assert format_context(table, 50) == "a\tb"

    def test_three_rows_cap_50(self):
        table = ResultTable(columns=["n"], rows=[(1,), (2,), (3,)])
        assert format_context(table, 50).count("\n") + 1 == 4

    def test_truncation_arithmetic(self):
        table = ResultTable(columns=["n"], rows=[(i,) for i in range(120)])
        text = format_context(table, 50)
        lines = text.split("\n")
        assert len(lines) == 52
        assert lines[-1].endswith("(+70 more)")

    def test_cell_rendering(self):
        table = ResultTable(
            columns=["a", "b", "c", "d"],
            rows=[(None, True, ["x", 1], "tab\there")],
        )
        assert format_context(table, 10).split("\n")[1] == "\ttrue\t['x', 1]\ttab here"


class TestAsk:
    def test_count_question_success(self, mock_backend, golden_graph, templates):
        exchange = ask(
            mock_backend, golden_graph, templates, "How many studies investigate vitiligo?"
        )
        assert exchange.status == STATUS_SUCCESS
        assert exchange.context.rows == [(3,)]
        assert "3" in exchange.answer
        assert len(exchange.attempts) == 1
        assert exchange.attempts[0].outcome == "ok"

    def test_repair_path_reaches_success_on_attempt_two(
        self, mock_backend, golden_graph, templates
    ):
        exchange = ask(
            mock_backend, golden_graph, templates, "What do we call the studies about vitiligo?"
        )
        assert exchange.status == STATUS_SUCCESS
        assert len(exchange.attempts) == 2
        assert "unknown_label" in exchange.attempts[0].outcome
        assert exchange.attempts[1].outcome == "ok"

    def test_exhausted_repairs(self, mock_backend, golden_graph, templates):
        exchange = ask(
            mock_backend, golden_graph, templates, "Please erase everything about melanoma."
        )
        assert exchange.status == STATUS_EXHAUSTED
        assert len(exchange.attempts) == 1 + 2
        assert exchange.answer == ""
        assert all("DELETE" in a.outcome for a in exchange.attempts)

    def test_attempts_bounded_by_max_repairs(self, mock_backend, golden_graph, templates):
        for max_repairs in (0, 1, 2, 3):
            exchange = ask(
                mock_backend,
                golden_graph,
                templates,
                "Please erase everything about melanoma.",
                max_repairs=max_repairs,
            )
            assert len(exchange.attempts) == 1 + max_repairs

    def test_empty_context_path(self, mock_backend, golden_graph, templates):
        exchange = ask(mock_backend, golden_graph, templates, "List the studies about melanoma.")
        assert exchange.status == STATUS_SUCCESS
        assert exchange.context.rows == []
        assert "No matching records" in exchange.answer

    def test_backend_error_captured(self, golden_graph, templates):
        class FailingBackend:
            def complete(self, system, user):
                raise BackendError("boom")

            def embed(self, text):
                raise BackendError("boom")

        exchange = ask(FailingBackend(), golden_graph, templates, "anything")
        assert exchange.status == STATUS_BACKEND_ERROR
        assert exchange.answer == ""
        assert "boom" in exchange.error

    def test_backend_failure_during_synthesis(self, golden_graph, templates):
        class FlakySynthesis:
            def complete(self, system, user):
                if "Query result rows:" in user:
                    raise BackendError("synthesis down")
                return "MATCH (d:Disease) RETURN count(d)"

            def embed(self, text):
                return {}

        exchange = ask(FlakySynthesis(), golden_graph, templates, "how many?")
        assert exchange.status == STATUS_BACKEND_ERROR
        assert exchange.answer == ""
        assert exchange.context.rows == [(6,)]  # evaluation had already run

    def test_graph_never_mutated(self, mock_backend, golden_graph, templates):
        before = golden_graph.dumps()
        for question in (
            "How many studies investigate vitiligo?",
            "Please erase everything about melanoma.",
            "unknown fallback question",
        ):
            ask(mock_backend, golden_graph, templates, question)
        assert golden_graph.dumps() == before

    def test_deterministic_exchange(self, mock_fixture_path, golden_graph, templates):
        def run():
            backend = MockBackend.from_file(mock_fixture_path)
            exchange = ask(
                backend, golden_graph, templates, "Which diseases resemble vitiligo?"
            )
            return exchange.to_dict(include_timings=False)

        assert run() == run()

    def test_executed_query_reparses_to_same_ast(self, mock_backend, golden_graph, templates):
        exchange = ask(
            mock_backend, golden_graph, templates, "Which studies are completed?"
        )
        assert exchange.status == STATUS_SUCCESS
        assert parse(render(exchange.executed_query)) == exchange.executed_query

    def test_answer_empty_iff_not_success(self, mock_backend, golden_graph, templates):
        for question in (
            "How many studies investigate vitiligo?",
            "List the studies about melanoma.",
            "Please erase everything about melanoma.",
        ):
            exchange = ask(mock_backend, golden_graph, templates, question)
            assert (exchange.answer == "") == (exchange.status != STATUS_SUCCESS)


class TestPromptTemplate:
    def test_default_templates_load(self):
        templates = PromptTemplate.load()
        assert "{schema}" in templates.cypher_generation

    def test_placeholder_count_enforced(self):
        with pytest.raises(ValueError):
            PromptTemplate(
                cypher_generation="{schema} {schema} {question}",
                answer_synthesis="{question} {context}",
                repair="{question} {bad_query} {error}",
            )

    def test_missing_placeholder_rejected(self):
        with pytest.raises(ValueError):
            PromptTemplate(
                cypher_generation="{schema} {question}",
                answer_synthesis="{question}",
                repair="{question} {bad_query} {error}",
            )

    def test_load_from_directory(self, tmp_path):
        (tmp_path / "cypher_generation.txt").write_text("{schema} {question}")
        (tmp_path / "answer_synthesis.txt").write_text("{question} {context}")
        (tmp_path / "repair.txt").write_text("{question} {bad_query} {error}")
        templates = PromptTemplate.load(tmp_path)
        assert templates.cypher_generation == "{schema} {question}"
