"""Result tables and the value model used by query evaluation.

Cell values are scalars, None (the empty marker for absent properties),
lists (from collect), or deterministic entity strings for whole nodes/edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from ..graph import PropertyGraph
from .ast import render_literal


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)


def format_entity(graph: PropertyGraph, kind: str, entity_id: int) -> str:
    """Stable text form of a node or edge, used when a bare variable is returned."""
    if kind == "node":
        node = graph.nodes[entity_id]
        props = ", ".join(
            f"{key}: {render_literal(node.properties[key])}"
            for key in sorted(node.properties)
        )
        return f"(#{entity_id}:{node.label}" + (f" {{{props}}})" if props else ")")
    edge = graph.edges[entity_id]
    props = ", ".join(
        f"{key}: {render_literal(edge.properties[key])}"
        for key in sorted(edge.properties)
    )
    return f"[#{entity_id}:{edge.rel_type}" + (f" {{{props}}}]" if props else "]")


def render_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, list):
        return "[" + ", ".join(render_literal(v) for v in value) + "]"
    return str(value).replace("\t", " ").replace("\n", " ")


def format_table(table: ResultTable, row_cap: Optional[int] = None) -> str:
    """Tab-separated rendering: header line then one line per row.

    With a cap, output is truncated after `row_cap` rows and a final
    `…(+N more)` line reports the remainder.
    """
    lines = ["\t".join(table.columns)]
    rows = table.rows if row_cap is None else table.rows[:row_cap]
    for row in rows:
        lines.append("\t".join(render_cell(value) for value in row))
    if row_cap is not None and len(table.rows) > row_cap:
        lines.append(f"…(+{len(table.rows) - row_cap} more)")
    return "\n".join(lines)
