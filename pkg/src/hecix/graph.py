"""In-memory property graph with label/property indexes and snapshot files.

The store keeps labeled nodes and typed directed edges, each carrying a flat
map of scalar properties.  Node and edge ids are monotonically increasing
integers assigned at insert time, so ingesting the same input in the same
order always produces the same ids and therefore byte-identical snapshots.

Concurrency contract: many concurrent readers OR one exclusive writer.  Query
evaluation never mutates a graph, so a fully built graph value can be shared
freely between threads.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union
from urllib.parse import quote, unquote

from .errors import (
    DanglingEndpoint,
    EmptyLabel,
    GraphError,
    IdCollision,
    NotFound,
    SnapshotCorrupt,
)

Scalar = Union[str, int, float, bool]

SNAPSHOT_HEADER = "HECIX-SNAPSHOT v1"

#: Property keys maintained in the (label, key, value) index on every label.
INDEXED_KEYS = ("name", "ext_id")


@dataclass
class NodeRecord:
    id: int
    label: str
    properties: dict[str, Scalar]


@dataclass
class EdgeRecord:
    id: int
    rel_type: str
    source: int
    target: int
    properties: dict[str, Scalar]


@dataclass(frozen=True)
class GraphStats:
    nodes: int
    edges: int


def _check_properties(properties: dict[str, Scalar]) -> None:
    for key, value in properties.items():
        if not isinstance(key, str) or not key:
            raise EmptyLabel(f"property key must be a non-empty string, got {key!r}")
        if not isinstance(value, (str, int, float, bool)):
            raise TypeError(f"property {key!r} has non-scalar value {value!r}")


class PropertyGraph:
    """Mutable container of nodes and edges with equality-lookup indexes."""

    def __init__(self) -> None:
        self.nodes: dict[int, NodeRecord] = {}
        self.edges: dict[int, EdgeRecord] = {}
        self.label_index: dict[str, set[int]] = {}
        self.prop_index: dict[tuple[str, str, Scalar], set[int]] = {}
        self._out: dict[int, list[int]] = {}
        self._in: dict[int, list[int]] = {}
        self._next_node_id = 0
        self._next_edge_id = 0

    # -- mutation ----------------------------------------------------------

    def add_node(
        self,
        label: str,
        properties: Optional[dict[str, Scalar]] = None,
        node_id: Optional[int] = None,
    ) -> int:
        if not label:
            raise EmptyLabel("node label must be non-empty")
        props = dict(properties or {})
        _check_properties(props)
        if node_id is None:
            node_id = self._next_node_id
        elif node_id in self.nodes:
            raise IdCollision(f"node id {node_id} already exists")
        self._next_node_id = max(self._next_node_id, node_id + 1)
        self.nodes[node_id] = NodeRecord(node_id, label, props)
        self.label_index.setdefault(label, set()).add(node_id)
        for key in INDEXED_KEYS:
            if key in props:
                self.prop_index.setdefault((label, key, props[key]), set()).add(node_id)
        self._out.setdefault(node_id, [])
        self._in.setdefault(node_id, [])
        return node_id

    def add_edge(
        self,
        rel_type: str,
        source: int,
        target: int,
        properties: Optional[dict[str, Scalar]] = None,
        edge_id: Optional[int] = None,
    ) -> int:
        if not rel_type:
            raise EmptyLabel("relationship type must be non-empty")
        if source not in self.nodes:
            raise DanglingEndpoint(f"source node {source} does not exist")
        if target not in self.nodes:
            raise DanglingEndpoint(f"target node {target} does not exist")
        props = dict(properties or {})
        _check_properties(props)
        if edge_id is None:
            edge_id = self._next_edge_id
        elif edge_id in self.edges:
            raise IdCollision(f"edge id {edge_id} already exists")
        self._next_edge_id = max(self._next_edge_id, edge_id + 1)
        self.edges[edge_id] = EdgeRecord(edge_id, rel_type, source, target, props)
        self._out[source].append(edge_id)
        self._in[target].append(edge_id)
        return edge_id

    # -- lookup ------------------------------------------------------------

    def get_node(self, node_id: int) -> NodeRecord:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise NotFound(f"node {node_id} does not exist") from None

    def get_edge(self, edge_id: int) -> EdgeRecord:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise NotFound(f"edge {edge_id} does not exist") from None

    def out_edges(self, node_id: int) -> list[int]:
        return self._out.get(node_id, [])

    def in_edges(self, node_id: int) -> list[int]:
        return self._in.get(node_id, [])

    def neighbors(
        self,
        node_id: int,
        direction: str = "both",
        rel_type: Optional[str] = None,
    ) -> set[int]:
        if node_id not in self.nodes:
            raise NotFound(f"node {node_id} does not exist")
        if direction not in ("out", "in", "both"):
            raise ValueError(f"direction must be out/in/both, got {direction!r}")
        result: set[int] = set()
        if direction in ("out", "both"):
            for eid in self._out[node_id]:
                edge = self.edges[eid]
                if rel_type is None or edge.rel_type == rel_type:
                    result.add(edge.target)
        if direction in ("in", "both"):
            for eid in self._in[node_id]:
                edge = self.edges[eid]
                if rel_type is None or edge.rel_type == rel_type:
                    result.add(edge.source)
        return result

    def find_nodes(
        self,
        label: str,
        key: Optional[str] = None,
        value: Optional[Scalar] = None,
    ) -> set[int]:
        """Node ids with the given label, optionally filtered on key == value.

        Uses the property index when the key is indexed; otherwise scans the
        label's nodes.  The result is identical either way.
        """
        if key is None:
            return set(self.label_index.get(label, set()))
        if key in INDEXED_KEYS:
            return set(self.prop_index.get((label, key, value), set()))
        return {
            nid
            for nid in self.label_index.get(label, set())
            if self.nodes[nid].properties.get(key) == value
        }

    def labels(self) -> list[str]:
        return sorted(self.label_index)

    def rel_types(self) -> list[str]:
        return sorted({edge.rel_type for edge in self.edges.values()})

    def stats(self) -> GraphStats:
        return GraphStats(nodes=len(self.nodes), edges=len(self.edges))

    def check_integrity(self) -> None:
        """Assert referential integrity and index coherence; raises on breach."""
        for edge in self.edges.values():
            if edge.source not in self.nodes or edge.target not in self.nodes:
                raise DanglingEndpoint(f"edge {edge.id} has a missing endpoint")
        for label, ids in self.label_index.items():
            for nid in ids:
                if self.nodes[nid].label != label:
                    raise GraphError(f"label index broken for node {nid}")
        for (label, key, value), ids in self.prop_index.items():
            for nid in ids:
                if self.nodes[nid].properties.get(key) != value:
                    raise GraphError(f"property index broken for node {nid}")

    # -- persistence ---------------------------------------------------------

    def dumps(self) -> str:
        """Canonical snapshot text: header, nodes then edges, sorted by id."""
        out = io.StringIO()
        out.write(SNAPSHOT_HEADER + "\n")
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            out.write(f"N\t{nid}\t{node.label}\t{_encode_props(node.properties)}\n")
        for eid in sorted(self.edges):
            edge = self.edges[eid]
            out.write(
                f"E\t{eid}\t{edge.rel_type}\t{edge.source}\t{edge.target}\t"
                f"{_encode_props(edge.properties)}\n"
            )
        return out.getvalue()


def snapshot_save(graph: PropertyGraph, path: Union[str, os.PathLike]) -> None:
    data = graph.dumps()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(data)


def snapshot_load(path: Union[str, os.PathLike]) -> PropertyGraph:
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        return _parse_snapshot(fh)


def snapshot_loads(text: str) -> PropertyGraph:
    return _parse_snapshot(io.StringIO(text))


def _parse_snapshot(lines: Iterable[str]) -> PropertyGraph:
    graph = PropertyGraph()
    it: Iterator[str] = iter(lines)
    header = next(it, None)
    if header is None or header.rstrip("\n") != SNAPSHOT_HEADER:
        raise SnapshotCorrupt(f"bad header {header!r}", 1)
    seen_edge = False
    for lineno, raw in enumerate(it, start=2):
        line = raw.rstrip("\n")
        if not line:
            continue
        fields = line.split("\t")
        kind = fields[0]
        try:
            if kind == "N":
                if seen_edge:
                    raise SnapshotCorrupt("node record after edge records", lineno)
                if len(fields) != 4:
                    raise SnapshotCorrupt("node record needs 4 fields", lineno)
                graph.add_node(fields[2], _decode_props(fields[3]), node_id=int(fields[1]))
            elif kind == "E":
                seen_edge = True
                if len(fields) != 6:
                    raise SnapshotCorrupt("edge record needs 6 fields", lineno)
                graph.add_edge(
                    fields[2],
                    int(fields[3]),
                    int(fields[4]),
                    _decode_props(fields[5]),
                    edge_id=int(fields[1]),
                )
            else:
                raise SnapshotCorrupt(f"unknown record kind {kind!r}", lineno)
        except SnapshotCorrupt:
            raise
        except (ValueError, KeyError, EmptyLabel, IdCollision, DanglingEndpoint) as exc:
            raise SnapshotCorrupt(str(exc), lineno) from exc
    return graph


# -- property text codec -----------------------------------------------------
# Properties serialize as URL-encoded key=value pairs joined by '&', keys
# sorted, values tagged with a one-letter type prefix so scalars round-trip.


def _render_scalar(value: Scalar) -> str:
    if isinstance(value, bool):  # bool first: bool is a subclass of int
        return "b:true" if value else "b:false"
    if isinstance(value, int):
        return f"i:{value}"
    if isinstance(value, float):
        return f"f:{value!r}"
    return f"s:{value}"


def _parse_scalar(text: str) -> Scalar:
    tag, _, body = text.partition(":")
    if tag == "s":
        return body
    if tag == "i":
        return int(body)
    if tag == "f":
        return float(body)
    if tag == "b":
        if body not in ("true", "false"):
            raise ValueError(f"bad boolean literal {body!r}")
        return body == "true"
    raise ValueError(f"unknown scalar tag {tag!r}")


def _encode_props(properties: dict[str, Scalar]) -> str:
    return "&".join(
        f"{quote(key, safe='')}={quote(_render_scalar(properties[key]), safe='')}"
        for key in sorted(properties)
    )


def _decode_props(text: str) -> dict[str, Scalar]:
    if not text:
        return {}
    props: dict[str, Scalar] = {}
    for pair in text.split("&"):
        key, sep, value = pair.partition("=")
        if not sep:
            raise ValueError(f"bad property pair {pair!r}")
        props[unquote(key)] = _parse_scalar(unquote(value))
    return props
