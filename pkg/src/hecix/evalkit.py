"""Retrieval-evaluation metrics with pluggable judges.

Four scores per sample: faithfulness (answer claims supported by context),
answer relevance (question/generated-question similarity), context precision
(rank-weighted relevance of retrieved chunks), and context recall (ground
truth claims covered by context).

Two judge implementations share one code path: ``LlmJudge`` delegates claim
splitting, support, and relevance calls to a live backend, while
``MockJudge`` is fully deterministic (sentence splitting, substring support,
Jaccard relevance, bag-of-words embeddings) so the whole suite runs offline
and bit-reproducibly.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

from .backends import LlmBackend, Vector, bow_embed, cosine
from .cypher.table import render_cell
from .errors import HecixError, NotApplicable

log = logging.getLogger(__name__)

METRIC_NAMES = (
    "faithfulness",
    "answer_relevance",
    "context_precision",
    "context_recall",
)

TABLE_ROW_NAMES = {
    "faithfulness": "Faithfulness",
    "answer_relevance": "Answer Relevance",
    "context_precision": "Context Precision",
    "context_recall": "Context Recall",
}

#: scores reported for the original live evaluation run; shown as a
#: reference column only — they depend on a hosted model and are not an
#: offline oracle
REFERENCE_SCORES = {
    "faithfulness": 0.8572,
    "answer_relevance": 0.9340,
    "context_precision": 0.9202,
    "context_recall": 0.6654,
}


@dataclass
class EvalSample:
    question: str
    ground_truth: str = ""
    answer: str = ""
    contexts: list[str] = field(default_factory=list)


# -- judges ---------------------------------------------------------------------


class Judge(Protocol):
    def split_statements(self, text: str) -> list[str]: ...

    def supports(self, statement: str, context: str) -> bool: ...

    def is_relevant(self, chunk: str, reference: str) -> bool: ...

    def generate_questions(self, answer: str, n: int) -> list[str]: ...

    def embed(self, text: str) -> Vector: ...


_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_WS = re.compile(r"\s+")


def _normalize(text: str) -> str:
    return _WS.sub(" ", text.casefold()).strip().rstrip(".!?")


def split_sentences(text: str) -> list[str]:
    parts = _SENTENCE_SPLIT.split(text.strip())
    return [part.strip() for part in parts if part.strip()]


class MockJudge:
    """Deterministic offline judge.

    Support is case-insensitive containment of the normalized statement in
    the normalized context; relevance is token-set Jaccard >= threshold;
    question generation rewords the answer's first sentence; embeddings are
    normalized term-frequency bags of words.
    """

    def __init__(self, jaccard_threshold: float = 0.2):
        self.jaccard_threshold = jaccard_threshold

    def split_statements(self, text: str) -> list[str]:
        return split_sentences(text)

    def supports(self, statement: str, context: str) -> bool:
        needle = _normalize(statement)
        return bool(needle) and needle in _normalize(context)

    def is_relevant(self, chunk: str, reference: str) -> bool:
        a = set(re.findall(r"\w+", chunk.casefold()))
        b = set(re.findall(r"\w+", reference.casefold()))
        if not a or not b:
            return False
        return len(a & b) / len(a | b) >= self.jaccard_threshold

    def generate_questions(self, answer: str, n: int) -> list[str]:
        sentences = split_sentences(answer)
        if not sentences:
            return []
        question = sentences[0].rstrip(".!?") + "?"
        return [question] * n

    def embed(self, text: str) -> dict[str, float]:
        return bow_embed(text)


class LlmJudge:
    """Judge that delegates every decision to a live backend."""

    def __init__(self, backend: LlmBackend):
        self.backend = backend

    def split_statements(self, text: str) -> list[str]:
        reply = self.backend.complete(
            "You decompose text into atomic factual claims.",
            "List each independent factual claim in the text below, one per "
            f"line, with no numbering or commentary.\n\n{text}",
        )
        return [line.strip() for line in reply.splitlines() if line.strip()]

    def supports(self, statement: str, context: str) -> bool:
        reply = self.backend.complete(
            "You verify whether a claim is supported by a context. "
            "Answer only yes or no.",
            f"Context:\n{context}\n\nClaim: {statement}\n\nSupported?",
        )
        return reply.strip().casefold().startswith("y")

    def is_relevant(self, chunk: str, reference: str) -> bool:
        reply = self.backend.complete(
            "You judge whether a retrieved chunk is relevant to an expected "
            "answer. Answer only yes or no.",
            f"Expected answer:\n{reference}\n\nChunk:\n{chunk}\n\nRelevant?",
        )
        return reply.strip().casefold().startswith("y")

    def generate_questions(self, answer: str, n: int) -> list[str]:
        reply = self.backend.complete(
            "You write questions that a given answer would satisfy.",
            f"Write {n} distinct questions answered by the text below, one "
            f"per line, no numbering.\n\n{answer}",
        )
        questions = [line.strip() for line in reply.splitlines() if line.strip()]
        return questions[:n]

    def embed(self, text: str) -> Vector:
        return self.backend.embed(text)


# -- metrics -----------------------------------------------------------------------


def decompose_statements(judge: Judge, text: str) -> list[str]:
    if not text.strip():
        return []
    return judge.split_statements(text)


def _clamp01(value: float) -> float:
    return max(0.0, min(1.0, value))


def faithfulness(judge: Judge, sample: EvalSample) -> float:
    """Fraction of answer statements supported by the concatenated context."""
    statements = decompose_statements(judge, sample.answer)
    if not statements:
        raise NotApplicable("no statements to verify")
    context = "\n".join(sample.contexts)
    supported = sum(1 for s in statements if judge.supports(s, context))
    return supported / len(statements)


def answer_relevance(judge: Judge, sample: EvalSample, n_questions: int = 3) -> float:
    """Mean cosine similarity between the question and questions generated
    from the answer, clamped to [0, 1]."""
    if not sample.answer.strip():
        raise NotApplicable("empty answer")
    questions = judge.generate_questions(sample.answer, n_questions)
    if not questions:
        raise NotApplicable("no questions generated")
    reference = judge.embed(sample.question)
    similarities = [_clamp01(cosine(reference, judge.embed(q))) for q in questions]
    return sum(similarities) / len(similarities)


def context_precision(judge: Judge, sample: EvalSample) -> float:
    """Rank-weighted precision: mean over relevant ranks k of precision@k."""
    if not sample.contexts:
        raise NotApplicable("no contexts retrieved")
    if not sample.ground_truth.strip():
        raise NotApplicable("no ground truth")
    flags = [judge.is_relevant(chunk, sample.ground_truth) for chunk in sample.contexts]
    total_relevant = sum(flags)
    if total_relevant == 0:
        return 0.0
    score = 0.0
    hits = 0
    for rank, flag in enumerate(flags, start=1):
        if flag:
            hits += 1
            score += hits / rank
    return score / total_relevant


def context_recall(judge: Judge, sample: EvalSample) -> float:
    """Fraction of ground-truth statements attributable to the context."""
    statements = decompose_statements(judge, sample.ground_truth)
    if not statements:
        raise NotApplicable("no ground truth statements")
    context = "\n".join(sample.contexts)
    attributed = sum(1 for s in statements if judge.supports(s, context))
    return attributed / len(statements)


# -- suite -------------------------------------------------------------------------


@dataclass
class SampleScores:
    question: str
    faithfulness: Optional[float] = None
    answer_relevance: Optional[float] = None
    context_precision: Optional[float] = None
    context_recall: Optional[float] = None
    error: str = ""

    def score(self, metric: str) -> Optional[float]:
        return getattr(self, metric)


@dataclass
class MetricReport:
    samples: list[SampleScores]
    aggregates: dict[str, Optional[float]]

    def to_tsv(self) -> str:
        lines = ["question\t" + "\t".join(METRIC_NAMES) + "\terror"]
        for row in self.samples:
            cells = [row.question.replace("\t", " ")]
            for metric in METRIC_NAMES:
                value = row.score(metric)
                cells.append("NA" if value is None else f"{value:.4f}")
            cells.append(row.error.replace("\t", " "))
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"

    def to_table_text(self) -> str:
        """Aggregate table plus the published reference column."""
        lines = ["Metric\tScore\tReference"]
        for metric in METRIC_NAMES:
            value = self.aggregates.get(metric)
            score = "NA" if value is None else f"{value:.4f}"
            lines.append(
                f"{TABLE_ROW_NAMES[metric]}\t{score}\t{REFERENCE_SCORES[metric]:.4f}"
            )
        return "\n".join(lines) + "\n"

    def summary_dict(self) -> dict:
        return {
            "samples": len(self.samples),
            "aggregates": dict(self.aggregates),
            "reference_scores": dict(REFERENCE_SCORES),
            "errors": sum(1 for row in self.samples if row.error),
        }


def score_sample(judge: Judge, sample: EvalSample) -> SampleScores:
    """All four metrics for one sample; inapplicable metrics stay None."""
    row = SampleScores(question=sample.question)
    metric_fns: dict[str, Callable[[Judge, EvalSample], float]] = {
        "faithfulness": faithfulness,
        "answer_relevance": answer_relevance,
        "context_precision": context_precision,
        "context_recall": context_recall,
    }
    for metric, fn in metric_fns.items():
        try:
            setattr(row, metric, fn(judge, sample))
        except NotApplicable as exc:
            log.debug("%s not applicable: %s", metric, exc)
        except HecixError as exc:
            row.error = f"{metric}: {exc}"
            log.warning("sample %r failed on %s: %s", sample.question, metric, exc)
    return row


def evaluate_suite(
    judge: Judge,
    samples: Sequence[EvalSample],
    pipeline: Optional[Callable[[str], object]] = None,
    max_workers: int = 1,
) -> MetricReport:
    """Score a suite; with a pipeline, answers and contexts come from live runs.

    Per-sample failures are recorded on the sample row and never abort the
    suite.  ``max_workers`` bounds concurrent scoring (backend rate limits);
    results keep suite order either way.
    """

    def prepare(sample: EvalSample) -> tuple[EvalSample, str]:
        if pipeline is None:
            return sample, ""
        try:
            exchange = pipeline(sample.question)
        except Exception as exc:  # pipeline contract: report, never abort
            return sample, f"pipeline: {exc}"
        answer = getattr(exchange, "answer", "")
        status = getattr(exchange, "status", "success")
        table = getattr(exchange, "context", None)
        contexts: list[str] = []
        if table is not None:
            contexts = ["\t".join(render_cell(v) for v in row) for row in table.rows]
        live = EvalSample(
            question=sample.question,
            ground_truth=sample.ground_truth,
            answer=answer,
            contexts=contexts,
        )
        error = "" if status == "success" else f"pipeline status: {status}"
        return live, error

    def run(sample: EvalSample) -> SampleScores:
        live, error = prepare(sample)
        row = score_sample(judge, live)
        if error and not row.error:
            row.error = error
        return row

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(run, samples))
    else:
        rows = [run(sample) for sample in samples]

    aggregates: dict[str, Optional[float]] = {}
    for metric in METRIC_NAMES:
        values = [row.score(metric) for row in rows if row.score(metric) is not None]
        aggregates[metric] = sum(values) / len(values) if values else None
    return MetricReport(samples=rows, aggregates=aggregates)


# -- suite file io -------------------------------------------------------------------


def load_suite(path) -> list[EvalSample]:
    """Read samples from a JSON-lines file (question, ground_truth, ...)."""
    samples: list[EvalSample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: bad JSON: {exc}") from exc
            if "question" not in row:
                raise ValueError(f"{path}:{lineno}: sample needs a question")
            samples.append(
                EvalSample(
                    question=str(row["question"]),
                    ground_truth=str(row.get("ground_truth", "")),
                    answer=str(row.get("answer", "")),
                    contexts=[str(c) for c in row.get("contexts", [])],
                )
            )
    return samples
