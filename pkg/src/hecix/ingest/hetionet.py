"""Heterogeneous-network source: parsing and disease-centered subgraph cuts.

The input is the public integrated-network JSON export: a top-level object
with ``nodes`` (kind, identifier, name) and ``edges`` (source_id, target_id,
kind, direction).  ``.bz2``-compressed exports are read transparently.
"""

from __future__ import annotations

import bz2
import difflib
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..errors import DiseaseNotFound, MalformedRecord, UnknownKind
from ..graph import PropertyGraph
from .diseases import DiseaseSpec

NODE_KINDS = (
    "Anatomy",
    "Biological Process",
    "Cellular Component",
    "Compound",
    "Disease",
    "Gene",
    "Molecular Function",
    "Pathway",
    "Pharmacologic Class",
    "Side Effect",
    "Symptom",
)

_KIND_ABBREV = {
    "Anatomy": "A",
    "Biological Process": "BP",
    "Cellular Component": "CC",
    "Compound": "C",
    "Disease": "D",
    "Gene": "G",
    "Molecular Function": "MF",
    "Pathway": "PW",
    "Pharmacologic Class": "PC",
    "Side Effect": "SE",
    "Symptom": "S",
}

#: metaedge kinds incident to Disease nodes, kept at radius 1
DISEASE_METAEDGES = (
    "treats",
    "palliates",
    "associates",
    "upregulates",
    "downregulates",
    "localizes",
    "presents",
    "resembles",
)

#: radius-2 expansion rules keyed by (source kind, edge kind); the value names
#: the endpoint that must already be in the subgraph (the other is pulled in)
_RADIUS2_RULES = {
    ("Compound", "causes"): "source",  # Compound -> Side Effect
    ("Pharmacologic Class", "includes"): "target",  # -> Compound
    ("Gene", "participates"): "source",  # Gene -> BP / CC / MF / Pathway
    ("Anatomy", "expresses"): "target",  # Anatomy -> Gene
    ("Anatomy", "upregulates"): "target",
    ("Anatomy", "downregulates"): "target",
}


@dataclass(frozen=True)
class SourceNode:
    kind: str
    identifier: str
    name: str


@dataclass(frozen=True)
class SourceEdge:
    source_kind: str
    source_id: str
    target_kind: str
    target_id: str
    kind: str
    direction: str


def rel_type_name(edge: SourceEdge) -> str:
    """Uppercase edge kind plus the metaedge abbreviation, e.g. TREATS_CtD."""
    abbrev = (
        _KIND_ABBREV[edge.source_kind] + edge.kind[0] + _KIND_ABBREV[edge.target_kind]
    )
    return f"{edge.kind.upper()}_{abbrev}"


def parse_hetionet(path) -> tuple[list[SourceNode], list[SourceEdge]]:
    """Parse the network export into typed node and edge records."""
    opener = bz2.open if str(path).endswith(".bz2") else open
    with opener(path, "rt", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "nodes" not in payload or "edges" not in payload:
        raise MalformedRecord("export must be an object with 'nodes' and 'edges'")

    nodes: list[SourceNode] = []
    for i, raw in enumerate(payload["nodes"]):
        try:
            kind = raw["kind"]
            identifier = str(raw["identifier"])
            name = str(raw["name"])
        except (TypeError, KeyError) as exc:
            raise MalformedRecord(f"node record missing {exc}", f"node {i}") from exc
        if kind not in NODE_KINDS:
            raise UnknownKind(f"node kind {kind!r} (node {i})")
        nodes.append(SourceNode(kind, identifier, name))

    edges: list[SourceEdge] = []
    for i, raw in enumerate(payload["edges"]):
        try:
            src_kind, src_id = raw["source_id"]
            dst_kind, dst_id = raw["target_id"]
            kind = raw["kind"]
        except (TypeError, KeyError, ValueError) as exc:
            raise MalformedRecord(f"edge record malformed: {exc}", f"edge {i}") from exc
        if src_kind not in NODE_KINDS or dst_kind not in NODE_KINDS:
            raise UnknownKind(f"edge endpoint kind (edge {i})")
        edges.append(
            SourceEdge(
                source_kind=src_kind,
                source_id=str(src_id),
                target_kind=dst_kind,
                target_id=str(dst_id),
                kind=kind,
                direction=raw.get("direction", "both"),
            )
        )
    return nodes, edges


def extract_disease_subgraph(
    nodes: Sequence[SourceNode],
    edges: Sequence[SourceEdge],
    specs: Iterable[DiseaseSpec],
    radius: int = 1,
) -> PropertyGraph:
    """Cut the subgraph around the roster diseases.

    Radius 1 keeps the disease nodes, every node adjacent to them through a
    disease-incident metaedge, and exactly those connecting edges.  Radius 2
    additionally follows side-effect, pharmacologic-class, pathway/process
    and anatomy-expression edges anchored at already-included nodes.
    """
    if radius not in (1, 2):
        raise ValueError(f"radius must be 1 or 2, got {radius}")
    specs = list(specs)

    by_key: dict[tuple[str, str], int] = {}  # (kind, identifier) -> order index
    for index, node in enumerate(nodes):
        by_key[(node.kind, node.identifier)] = index

    spec_for_index: dict[int, DiseaseSpec] = {}
    for spec in specs:
        index = by_key.get(("Disease", spec.hetionet_key))
        if index is None:
            disease_names = [n.name for n in nodes if n.kind == "Disease"]
            candidates = difflib.get_close_matches(
                spec.canonical_name, disease_names, n=3, cutoff=0.4
            )
            raise DiseaseNotFound(spec.canonical_name, candidates)
        spec_for_index[index] = spec

    selected = set(spec_for_index)
    included: set[int] = set(selected)
    kept_edges: list[SourceEdge] = []
    for edge in edges:
        if edge.kind not in DISEASE_METAEDGES:
            continue
        src = by_key[(edge.source_kind, edge.source_id)]
        dst = by_key[(edge.target_kind, edge.target_id)]
        if src in selected or dst in selected:
            kept_edges.append(edge)
            included.add(src)
            included.add(dst)

    if radius == 2:
        frontier = set(included)
        for edge in edges:
            anchor_side = _RADIUS2_RULES.get((edge.source_kind, edge.kind))
            if anchor_side is None:
                continue
            src = by_key[(edge.source_kind, edge.source_id)]
            dst = by_key[(edge.target_kind, edge.target_id)]
            anchor = src if anchor_side == "source" else dst
            if anchor in frontier:
                kept_edges.append(edge)
                included.add(src)
                included.add(dst)

    graph = PropertyGraph()
    node_ids: dict[int, int] = {}
    for index in sorted(included):
        node = nodes[index]
        spec = spec_for_index.get(index)
        properties: dict = {"ext_id": node.identifier}
        if spec is not None:
            # canonical roster name becomes the merge key; keep the source name
            properties["name"] = spec.canonical_name
            if node.name != spec.canonical_name:
                properties["source_name"] = node.name
        else:
            properties["name"] = node.name
        node_ids[index] = graph.add_node(node.kind, properties)
    for edge in kept_edges:
        src = node_ids[by_key[(edge.source_kind, edge.source_id)]]
        dst = node_ids[by_key[(edge.target_kind, edge.target_id)]]
        graph.add_edge(rel_type_name(edge), src, dst, {})
    return graph
