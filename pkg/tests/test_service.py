import threading

import pytest
import requests

from hecix.backends import MockBackend
from hecix.errors import BackendError
from hecix.graph import snapshot_load
from hecix.pipeline import ask
from hecix.service import build_server


class FailingBackend:
    def complete(self, system, user):
        raise BackendError("backend unavailable")

    def embed(self, text):
        raise BackendError("backend unavailable")


@pytest.fixture()
def server(golden_snapshot_path, mock_fixture_path):
    graph = snapshot_load(golden_snapshot_path)
    backend = MockBackend.from_file(mock_fixture_path)
    report = {"merged_nodes": 11, "merged_edges": 12, "disease_join_count": 6}
    httpd = build_server(graph, backend, report=report)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    host, port = httpd.server_address[:2]
    yield f"http://{host}:{port}", graph
    httpd.shutdown()
    httpd.server_close()


@pytest.fixture()
def failing_server(golden_snapshot_path):
    graph = snapshot_load(golden_snapshot_path)
    httpd = build_server(graph, FailingBackend())
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    host, port = httpd.server_address[:2]
    yield f"http://{host}:{port}"
    httpd.shutdown()
    httpd.server_close()


class TestHealthAndSchema:
    def test_health_reports_fixture_counts(self, server):
        base, _ = server
        body = requests.get(f"{base}/health", timeout=5).json()
        assert body == {"status": "ok", "nodes": 11, "edges": 12}

    def test_schema_text(self, server):
        base, _ = server
        response = requests.get(f"{base}/schema", timeout=5)
        assert response.status_code == 200
        assert response.text.startswith("Node labels:")
        assert "(:Study)-[:STUDIES]->(:Disease)" in response.text

    def test_stats_returns_report(self, server):
        base, _ = server
        body = requests.get(f"{base}/stats", timeout=5).json()
        assert body["merged_nodes"] == 11

    def test_unknown_route_404(self, server):
        base, _ = server
        assert requests.get(f"{base}/nope", timeout=5).status_code == 404


class TestCypherEndpoint:
    def test_query_rows(self, server):
        base, _ = server
        response = requests.post(
            f"{base}/cypher",
            json={"query": "MATCH (d:Disease) RETURN count(d)"},
            timeout=5,
        )
        assert response.status_code == 200
        assert response.json() == {"columns": ["count(d)"], "rows": [[6]]}

    def test_delete_rejected_400(self, server):
        base, _ = server
        response = requests.post(
            f"{base}/cypher", json={"query": "MATCH (n) DELETE n"}, timeout=5
        )
        assert response.status_code == 400
        assert response.json()["code"] == "forbidden_clause"

    def test_parse_error_400(self, server):
        base, _ = server
        response = requests.post(
            f"{base}/cypher", json={"query": "MATCH (n RETURN n"}, timeout=5
        )
        assert response.status_code == 400
        assert response.json()["code"] == "parse_error"

    def test_missing_body_field_400(self, server):
        base, _ = server
        assert requests.post(f"{base}/cypher", json={}, timeout=5).status_code == 400

    def test_default_limit_enforced(self, server):
        base, _ = server
        response = requests.post(
            f"{base}/cypher",
            json={"query": "MATCH (a)-[r]-(b) RETURN a, b"},
            timeout=5,
        )
        assert response.status_code == 200
        assert len(response.json()["rows"]) <= 50


class TestAskEndpoint:
    def test_ask_matches_cli_pipeline(self, server, mock_fixture_path, templates):
        base, graph = server
        question = "How many studies investigate vitiligo?"
        response = requests.post(f"{base}/ask", json={"question": question}, timeout=5)
        assert response.status_code == 200
        body = response.json()
        direct = ask(
            MockBackend.from_file(mock_fixture_path), graph, templates, question
        ).to_dict(include_timings=False)
        assert body == direct

    def test_exhausted_repairs_422_with_attempts(self, server):
        base, _ = server
        response = requests.post(
            f"{base}/ask",
            json={"question": "Please erase everything about melanoma."},
            timeout=5,
        )
        assert response.status_code == 422
        body = response.json()
        assert body["code"] == "exhausted_repairs"
        assert len(body["attempts"]) == 3
        assert all("DELETE" in attempt["outcome"] for attempt in body["attempts"])

    def test_backend_failure_502(self, failing_server):
        response = requests.post(
            f"{failing_server}/ask", json={"question": "anything"}, timeout=5
        )
        assert response.status_code == 502
        assert response.json()["code"] == "backend_error"

    def test_missing_question_400(self, server):
        base, _ = server
        assert requests.post(f"{base}/ask", json={}, timeout=5).status_code == 400

    def test_malformed_json_400(self, server):
        base, _ = server
        response = requests.post(
            f"{base}/ask",
            data=b"{not json",
            headers={"Content-Type": "application/json"},
            timeout=5,
        )
        assert response.status_code == 400


class TestImmutability:
    def test_health_constant_across_request_mix(self, server):
        base, _ = server
        before = requests.get(f"{base}/health", timeout=5).json()
        for i in range(20):
            requests.post(
                f"{base}/cypher",
                json={"query": f"MATCH (n) DELETE n // {i}"},
                timeout=5,
            )
            requests.post(f"{base}/ask", json={"question": f"question {i}"}, timeout=5)
        after = requests.get(f"{base}/health", timeout=5).json()
        assert before == after

    def test_concurrent_asks_are_consistent(self, server):
        base, _ = server
        results = []

        def worker():
            response = requests.post(
                f"{base}/ask",
                json={"question": "Which diseases resemble vitiligo?"},
                timeout=10,
            )
            results.append((response.status_code, response.json()["answer"]))

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(set(results)) == 1
        assert results[0][0] == 200
