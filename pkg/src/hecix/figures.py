"""Figure rendering for report outputs.

Both report paths (ingestion merge reports, metric reports) write a PNG
next to their delimited output.  The non-interactive backend is forced so
rendering works headless and in tests.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evalkit import METRIC_NAMES, REFERENCE_SCORES, TABLE_ROW_NAMES, MetricReport
from .ingest import MergeReport


def save_merge_figure(report: MergeReport, path) -> None:
    """Grouped bar chart of node/edge counts per source and merged."""
    sides = ["network", "trials", "merged"]
    nodes = [report.hetionet_nodes, report.ct_nodes, report.merged_nodes]
    edges = [report.hetionet_edges, report.ct_edges, report.merged_edges]

    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    positions = range(len(sides))
    width = 0.38
    ax.bar([p - width / 2 for p in positions], nodes, width, label="nodes")
    ax.bar([p + width / 2 for p in positions], edges, width, label="edges")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(sides)
    ax.set_ylabel("count")
    ax.set_title(
        f"Knowledge graph merge ({report.disease_join_count} diseases joined)"
    )
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_metrics_figure(report: MetricReport, path) -> None:
    """Bar chart of aggregate metric scores against the reference column."""
    labels = [TABLE_ROW_NAMES[m] for m in METRIC_NAMES]
    scores = [report.aggregates.get(m) for m in METRIC_NAMES]
    reference = [REFERENCE_SCORES[m] for m in METRIC_NAMES]

    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    positions = range(len(labels))
    width = 0.38
    ax.bar(
        [p - width / 2 for p in positions],
        [0.0 if s is None else s for s in scores],
        width,
        label="this run",
    )
    ax.bar([p + width / 2 for p in positions], reference, width, label="reference")
    for p, s in zip(positions, scores):
        if s is None:
            ax.text(p - width / 2, 0.02, "NA", ha="center", fontsize=8)
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Retrieval evaluation metrics")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
