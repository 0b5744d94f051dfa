"""Schema descriptor derived from a live graph.

Feeds two consumers: query validation (unknown label / relationship type /
property key warnings) and the prompt context handed to the language model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import PropertyGraph


@dataclass
class GraphSchema:
    #: label -> sorted property keys observed on nodes of that label
    labels: dict[str, list[str]] = field(default_factory=dict)
    rel_types: set[str] = field(default_factory=set)
    #: (source label, rel type, target label) triples actually present
    triples: set[tuple[str, str, str]] = field(default_factory=set)

    @classmethod
    def from_graph(cls, graph: PropertyGraph) -> "GraphSchema":
        label_keys: dict[str, set[str]] = {}
        for node in graph.nodes.values():
            label_keys.setdefault(node.label, set()).update(node.properties)
        rel_types: set[str] = set()
        triples: set[tuple[str, str, str]] = set()
        for edge in graph.edges.values():
            rel_types.add(edge.rel_type)
            triples.add(
                (
                    graph.nodes[edge.source].label,
                    edge.rel_type,
                    graph.nodes[edge.target].label,
                )
            )
        return cls(
            labels={label: sorted(keys) for label, keys in label_keys.items()},
            rel_types=rel_types,
            triples=triples,
        )

    def all_property_keys(self) -> set[str]:
        keys: set[str] = set()
        for props in self.labels.values():
            keys.update(props)
        return keys

    def render(self) -> str:
        """Deterministic plain-text schema, sorted lexicographically."""
        lines = ["Node labels:"]
        for label in sorted(self.labels):
            keys = ", ".join(self.labels[label])
            lines.append(f"  {label}: {keys}" if keys else f"  {label}:")
        lines.append("Relationships:")
        for src, rel, dst in sorted(self.triples):
            lines.append(f"  (:{src})-[:{rel}]->(:{dst})")
        return "\n".join(lines) + "\n"
