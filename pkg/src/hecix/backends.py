"""Language-model backends: the chat-completion wire client and the mock.

Any service honoring the chat-completion POST shape (system/user messages in,
text out) plugs in.  The mock is table-driven and fully deterministic, which
is what every offline test and the reproducibility guarantees rely on.
"""

from __future__ import annotations

import json
import logging
import math
import os
import re
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol, Sequence, Union

import requests

from .errors import BackendError

log = logging.getLogger(__name__)

Vector = Union[Mapping[str, float], Sequence[float]]

ENV_ENDPOINT = "HECIX_LLM_ENDPOINT"
ENV_MODEL = "HECIX_LLM_MODEL"
ENV_KEY = "HECIX_LLM_KEY"
ENV_TIMEOUT = "HECIX_LLM_TIMEOUT_S"


class LlmBackend(Protocol):
    def complete(self, system: str, user: str) -> str: ...

    def embed(self, text: str) -> Vector: ...


# -- text embedding helpers ------------------------------------------------------

_TOKEN = re.compile(r"\w+")


def tokenize_words(text: str) -> list[str]:
    return _TOKEN.findall(text.casefold())


def bow_embed(text: str) -> dict[str, float]:
    """L2-normalized term-frequency vector, keyed by token."""
    counts: dict[str, float] = {}
    for token in tokenize_words(text):
        counts[token] = counts.get(token, 0.0) + 1.0
    norm = math.sqrt(sum(v * v for v in counts.values()))
    if norm == 0.0:
        return {}
    return {token: value / norm for token, value in counts.items()}


def cosine(a: Vector, b: Vector) -> float:
    """Cosine similarity for sparse (mapping) or dense (sequence) vectors."""
    if isinstance(a, Mapping) and isinstance(b, Mapping):
        if len(b) < len(a):
            a, b = b, a
        dot = sum(value * b.get(token, 0.0) for token, value in a.items())
        na = math.sqrt(sum(v * v for v in a.values()))
        nb = math.sqrt(sum(v * v for v in b.values()))
    elif not isinstance(a, Mapping) and not isinstance(b, Mapping):
        dot = sum(x * y for x, y in zip(a, b))
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(y * y for y in b))
    else:
        raise TypeError("cannot mix sparse and dense vectors")
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


# -- HTTP backend ------------------------------------------------------------------


@dataclass
class BackendConfig:
    endpoint: str
    model: str
    credential: str = field(default="", repr=False)  # keep secrets out of logs
    timeout_s: float = 30.0
    max_retries: int = 2

    @classmethod
    def from_env(cls, env: Optional[Mapping[str, str]] = None) -> "BackendConfig":
        env = env if env is not None else os.environ
        endpoint = env.get(ENV_ENDPOINT, "")
        model = env.get(ENV_MODEL, "")
        if not endpoint or not model:
            raise BackendError(
                f"backend not configured: set {ENV_ENDPOINT} and {ENV_MODEL}"
            )
        return cls(
            endpoint=endpoint,
            model=model,
            credential=env.get(ENV_KEY, ""),
            timeout_s=float(env.get(ENV_TIMEOUT, "30")),
        )


class HttpBackend:
    """Chat-completion wire client with bounded retries.

    ``complete`` POSTs ``{endpoint}/chat/completions``; ``embed`` POSTs
    ``{endpoint}/embeddings``.  5xx responses and transport errors retry up
    to ``max_retries`` times; anything else raises ``BackendError``.
    """

    def __init__(self, config: BackendConfig, session: Optional[requests.Session] = None):
        self.config = config
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.credential:
            headers["Authorization"] = f"Bearer {self.config.credential}"
        return headers

    def _post(self, path: str, payload: dict) -> dict:
        url = self.config.endpoint.rstrip("/") + path
        last_error: Optional[Exception] = None
        for attempt in range(self.config.max_retries + 1):
            try:
                response = self._session.post(
                    url,
                    data=json.dumps(payload),
                    headers=self._headers(),
                    timeout=self.config.timeout_s,
                )
            except requests.RequestException as exc:
                last_error = exc
                log.warning("backend transport error (attempt %d): %s", attempt + 1, exc)
            else:
                if response.status_code >= 500:
                    last_error = BackendError(f"server error {response.status_code}")
                    log.warning("backend 5xx (attempt %d)", attempt + 1)
                elif response.status_code >= 400:
                    raise BackendError(
                        f"backend rejected request: {response.status_code} {response.text[:200]}"
                    )
                else:
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise BackendError(f"backend returned non-JSON body: {exc}") from exc
            if attempt < self.config.max_retries:
                time.sleep(min(2.0**attempt * 0.2, 2.0))
        raise BackendError(f"backend unreachable after retries: {last_error}")

    def complete(self, system: str, user: str) -> str:
        payload = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        body = self._post("/chat/completions", payload)
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc

    def embed(self, text: str) -> list[float]:
        body = self._post("/embeddings", {"model": self.config.model, "input": text})
        try:
            return [float(x) for x in body["data"][0]["embedding"]]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed embedding response: {exc}") from exc


# -- mock backend --------------------------------------------------------------------

#: a synthesis prompt is recognized by this marker line from the template
CONTEXT_MARKER = "Query result rows:"

ANSWER_PREFIX = "Based on the knowledge graph: "
EMPTY_ANSWER = "No matching records were found in the knowledge graph."


@dataclass
class MockRule:
    """Canned completion matched by substring(s) against the user prompt."""

    match: tuple[str, ...]
    completion: str

    def matches(self, text: str) -> bool:
        folded = text.casefold()
        return all(needle.casefold() in folded for needle in self.match)


@dataclass
class MockBackend:
    """Deterministic, stateless table-driven backend.

    Rules are evaluated in order; the first whose substrings all occur in
    the user prompt wins.  Prompts that carry the context marker are answer
    synthesis requests and are answered by echoing the result rows, so the
    whole pipeline stays a pure function of its inputs.
    """

    rules: list[MockRule] = field(default_factory=list)
    default_completion: str = "MATCH (d:Disease) RETURN d.name"

    @classmethod
    def from_file(cls, path) -> "MockBackend":
        """Load rules from a JSON-lines table.

        Each line is an object with ``match`` (string or list of strings)
        and ``completion``; a line with only ``default`` sets the fallback.
        """
        rules: list[MockRule] = []
        default = cls.default_completion
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: bad JSON: {exc}") from exc
                if "default" in row:
                    default = str(row["default"])
                    continue
                match = row["match"]
                if isinstance(match, str):
                    match = [match]
                rules.append(MockRule(tuple(match), str(row["completion"])))
        return cls(rules=rules, default_completion=default)

    def complete(self, system: str, user: str) -> str:
        if CONTEXT_MARKER in user:
            return self._synthesize(user)
        for rule in self.rules:
            if rule.matches(user):
                return rule.completion
        return self.default_completion

    def _synthesize(self, user: str) -> str:
        lines = user.split(CONTEXT_MARKER, 1)[1].splitlines()
        data_rows = [line.strip() for line in lines[2:] if line.strip()]
        data_rows = [row for row in data_rows if not row.startswith("…(")]
        if not data_rows:
            return EMPTY_ANSWER
        return ANSWER_PREFIX + "; ".join(data_rows) + "."

    def embed(self, text: str) -> dict[str, float]:
        return bow_embed(text)
