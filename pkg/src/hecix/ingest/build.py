"""Build the merged knowledge graph from the two sources.

The trials side becomes a 9-node-type / 10-relationship-type graph; the
network side contributes the disease-centered subgraph; the two unify on
Disease nodes carrying equal canonical names.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..graph import PropertyGraph, Scalar
from .ctgov import StudyRecord, fetch_studies, load_study_records, parse_ctgov_study
from .diseases import DiseaseSpec, normalize_condition
from .hetionet import DISEASE_METAEDGES, extract_disease_subgraph, parse_hetionet

log = logging.getLogger(__name__)

CT_NODE_LABELS = (
    "Disease",
    "PI",
    "Study",
    "Condition",
    "Phase",
    "Location",
    "Intervention",
    "AgeGroup",
    "Sex",
)

CT_REL_TYPES = (
    "STUDIES",
    "HAS_CONDITION",
    "MAPS_TO",
    "LED_BY",
    "IN_PHASE",
    "CONDUCTED_AT",
    "USES",
    "ELIGIBLE_AGE",
    "ELIGIBLE_SEX",
    "AFFILIATED_WITH",
)

#: disease-incident relationship names present at radius 1
HETIONET_RADIUS1_RELS = (
    "TREATS_CtD",
    "PALLIATES_CpD",
    "ASSOCIATES_DaG",
    "UPREGULATES_DuG",
    "DOWNREGULATES_DdG",
    "LOCALIZES_DlA",
    "PRESENTS_DpS",
    "RESEMBLES_DrD",
)

#: totals published for the original full-scale build; shown for reference
#: only, never asserted (the exact source selection is not reproducible)
REFERENCE_TOTALS = {"nodes": 6509, "edges": 14377}


@dataclass
class MergeReport:
    hetionet_nodes: int
    hetionet_edges: int
    ct_nodes: int
    ct_edges: int
    merged_nodes: int
    merged_edges: int
    disease_join_count: int
    bridge_edges_added: int
    unmatched_conditions: list[str] = field(default_factory=list)

    def check(self) -> None:
        """Assert the merge arithmetic; raises AssertionError on breach."""
        assert (
            self.merged_nodes
            == self.hetionet_nodes + self.ct_nodes - self.disease_join_count
        ), "node arithmetic violated"
        assert (
            self.merged_edges
            == self.hetionet_edges + self.ct_edges + self.bridge_edges_added
        ), "edge arithmetic violated"

    def to_dict(self) -> dict:
        return {
            "hetionet_nodes": self.hetionet_nodes,
            "hetionet_edges": self.hetionet_edges,
            "ct_nodes": self.ct_nodes,
            "ct_edges": self.ct_edges,
            "merged_nodes": self.merged_nodes,
            "merged_edges": self.merged_edges,
            "disease_join_count": self.disease_join_count,
            "bridge_edges_added": self.bridge_edges_added,
            "unmatched_conditions": list(self.unmatched_conditions),
            "reference_totals": dict(REFERENCE_TOTALS),
        }

    def to_tsv(self) -> str:
        rows = [
            ("hetionet_nodes", self.hetionet_nodes),
            ("hetionet_edges", self.hetionet_edges),
            ("ct_nodes", self.ct_nodes),
            ("ct_edges", self.ct_edges),
            ("merged_nodes", self.merged_nodes),
            ("merged_edges", self.merged_edges),
            ("disease_join_count", self.disease_join_count),
            ("bridge_edges_added", self.bridge_edges_added),
            ("unmatched_conditions", ";".join(self.unmatched_conditions)),
        ]
        lines = ["field\tvalue"]
        lines.extend(f"{name}\t{value}" for name, value in rows)
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [
            "Merge report",
            f"  network side:    {self.hetionet_nodes} nodes, {self.hetionet_edges} edges",
            f"  trials side:     {self.ct_nodes} nodes, {self.ct_edges} edges",
            f"  merged:          {self.merged_nodes} nodes, {self.merged_edges} edges",
            f"  diseases joined: {self.disease_join_count}",
            f"  bridge edges:    {self.bridge_edges_added}",
            (
                f"  reference totals (original full-scale build): "
                f"{REFERENCE_TOTALS['nodes']} nodes, {REFERENCE_TOTALS['edges']} edges"
            ),
        ]
        if self.unmatched_conditions:
            lines.append(
                f"  unmatched conditions ({len(self.unmatched_conditions)}): "
                + ", ".join(self.unmatched_conditions)
            )
        return "\n".join(lines) + "\n"


def build_ct_graph(
    records: Sequence[StudyRecord], specs: Sequence[DiseaseSpec]
) -> PropertyGraph:
    """Turn normalized study records into the trials-side property graph.

    Every disease in the roster materializes even with zero records.  A
    record whose conditions match no roster disease is dropped (it would
    otherwise orphan its Study node) and logged.
    """
    graph = PropertyGraph()
    node_key: dict[tuple, int] = {}
    edge_seen: set[tuple[str, int, int]] = set()

    def node(label: str, key, properties: dict[str, Scalar]) -> int:
        full_key = (label, key)
        if full_key not in node_key:
            node_key[full_key] = graph.add_node(label, properties)
        return node_key[full_key]

    def edge(rel: str, src: int, dst: int, properties: Optional[dict] = None) -> None:
        token = (rel, src, dst)
        if token not in edge_seen:
            edge_seen.add(token)
            graph.add_edge(rel, src, dst, properties or {})

    disease_ids: dict[str, int] = {}
    for spec in specs:
        disease_ids[spec.canonical_name] = node(
            "Disease",
            spec.canonical_name.casefold(),
            {"name": spec.canonical_name, "ext_id": spec.hetionet_key},
        )

    for record in records:
        matched: list[str] = []
        for condition in record.conditions:
            canonical = normalize_condition(condition, specs)
            if canonical and canonical not in matched:
                matched.append(canonical)
        if not matched:
            log.info("dropping %s: no condition matches the roster", record.nct_id)
            continue

        study_props: dict[str, Scalar] = {
            "name": record.title or record.nct_id,
            "ext_id": record.nct_id,
        }
        if record.status:
            study_props["status"] = record.status
        if record.min_age:
            study_props["min_age"] = record.min_age
        if record.max_age:
            study_props["max_age"] = record.max_age
        study = node("Study", record.nct_id, study_props)

        for canonical in matched:
            edge("STUDIES", study, disease_ids[canonical])

        for condition in record.conditions:
            cond = node("Condition", condition, {"name": condition})
            edge("HAS_CONDITION", study, cond)
            canonical = normalize_condition(condition, specs)
            if canonical:
                edge("MAPS_TO", cond, disease_ids[canonical])

        location_ids: dict[str, int] = {}  # facility (casefold) -> node, this study
        for facility, city, country in record.locations:
            loc = node(
                "Location",
                (facility, city, country),
                {"name": facility, "city": city, "country": country},
            )
            location_ids.setdefault(facility.casefold(), loc)
            edge("CONDUCTED_AT", study, loc)

        for name, role, affiliation in record.officials:
            pi = node("PI", name, {"name": name})
            edge("LED_BY", study, pi, {"role": role} if role else {})
            if affiliation and affiliation.casefold() in location_ids:
                edge("AFFILIATED_WITH", pi, location_ids[affiliation.casefold()])

        for kind, name in record.interventions:
            item = node("Intervention", (kind, name), {"name": name, "type": kind})
            edge("USES", study, item)

        for phase in record.phases:
            edge("IN_PHASE", study, node("Phase", phase, {"name": phase}))

        for age in record.std_ages:
            edge("ELIGIBLE_AGE", study, node("AgeGroup", age, {"name": age}))

        edge("ELIGIBLE_SEX", study, node("Sex", record.sex, {"name": record.sex}))

    return graph


def merge_graphs(
    hetionet_sub: PropertyGraph, ct_graph: PropertyGraph
) -> tuple[PropertyGraph, MergeReport]:
    """Disjoint union of the two graphs with Disease nodes unified by name.

    Disease nodes whose canonical names match case-insensitively collapse
    into one node keeping both external ids; everything else copies over.
    """
    merged = PropertyGraph()
    het_map: dict[int, int] = {}
    disease_by_name: dict[str, int] = {}
    for nid in sorted(hetionet_sub.nodes):
        record = hetionet_sub.nodes[nid]
        new_id = merged.add_node(record.label, dict(record.properties))
        het_map[nid] = new_id
        if record.label == "Disease":
            name = str(record.properties.get("name", "")).casefold()
            disease_by_name.setdefault(name, new_id)
    for eid in sorted(hetionet_sub.edges):
        record = hetionet_sub.edges[eid]
        merged.add_edge(
            record.rel_type,
            het_map[record.source],
            het_map[record.target],
            dict(record.properties),
        )

    joined = 0
    ct_map: dict[int, int] = {}
    for nid in sorted(ct_graph.nodes):
        record = ct_graph.nodes[nid]
        if record.label == "Disease":
            name = str(record.properties.get("name", "")).casefold()
            target = disease_by_name.get(name)
            if target is not None:
                joined += 1
                ct_map[nid] = target
                ct_ext = record.properties.get("ext_id")
                existing = merged.nodes[target].properties.get("ext_id")
                if ct_ext is not None and ct_ext != existing:
                    merged.nodes[target].properties["ext_id_ct"] = ct_ext
                continue
        ct_map[nid] = merged.add_node(record.label, dict(record.properties))
    bridge_edges = 0  # the merge itself adds no edges; bridges exist pre-merge
    for eid in sorted(ct_graph.edges):
        record = ct_graph.edges[eid]
        merged.add_edge(
            record.rel_type,
            ct_map[record.source],
            ct_map[record.target],
            dict(record.properties),
        )

    unmatched = sorted(
        str(ct_graph.nodes[nid].properties.get("name", ""))
        for nid in ct_graph.label_index.get("Condition", set())
        if not ct_graph.neighbors(nid, "out", "MAPS_TO")
    )

    report = MergeReport(
        hetionet_nodes=len(hetionet_sub.nodes),
        hetionet_edges=len(hetionet_sub.edges),
        ct_nodes=len(ct_graph.nodes),
        ct_edges=len(ct_graph.edges),
        merged_nodes=len(merged.nodes),
        merged_edges=len(merged.edges),
        disease_join_count=joined,
        bridge_edges_added=bridge_edges,
        unmatched_conditions=unmatched,
    )
    report.check()
    merged.check_integrity()
    return merged, report


def run_ingestion(
    hetionet_path,
    specs: Sequence[DiseaseSpec],
    radius: int = 1,
    ctgov_dir=None,
    ctgov_fetch: bool = False,
    nct_ids: Optional[set[str]] = None,
    per_disease_limit: int = 200,
) -> tuple[PropertyGraph, MergeReport]:
    """End-to-end build: parse, extract, transform, and merge."""
    nodes, edges = parse_hetionet(hetionet_path)
    log.info("parsed network export: %d nodes, %d edges", len(nodes), len(edges))
    hetionet_sub = extract_disease_subgraph(nodes, edges, specs, radius=radius)
    log.info(
        "disease subgraph (radius %d): %d nodes, %d edges",
        radius,
        len(hetionet_sub.nodes),
        len(hetionet_sub.edges),
    )

    records: list[StudyRecord] = []
    if ctgov_dir is not None:
        records = load_study_records(ctgov_dir, nct_ids=nct_ids)
    elif ctgov_fetch:
        seen: set[str] = set()
        for spec in specs:
            for document in fetch_studies(spec.ctgov_terms[0], per_disease_limit):
                try:
                    record = parse_ctgov_study(document)
                except Exception as exc:  # malformed remote record
                    log.warning("skipping fetched record: %s", exc)
                    continue
                if record.nct_id in seen:
                    continue
                if nct_ids is not None and record.nct_id not in nct_ids:
                    continue
                seen.add(record.nct_id)
                records.append(record)
    log.info("using %d study records", len(records))

    ct_graph = build_ct_graph(records, specs)
    check_ct_invariants(ct_graph)
    merged, report = merge_graphs(hetionet_sub, ct_graph)
    if radius == 1:
        stray = set(merged.rel_types()) - closed_rel_set()
        assert not stray, f"relationship names outside the closed set: {sorted(stray)}"
    return merged, report


def check_ct_invariants(graph: PropertyGraph) -> None:
    """Structural invariants of the trials side; raises AssertionError."""
    for sid in graph.label_index.get("Study", set()):
        studies = [
            eid
            for eid in graph.out_edges(sid)
            if graph.edges[eid].rel_type == "STUDIES"
        ]
        assert studies, f"study {sid} has no STUDIES edge"
        sexes = [
            eid
            for eid in graph.out_edges(sid)
            if graph.edges[eid].rel_type == "ELIGIBLE_SEX"
        ]
        assert len(sexes) == 1, f"study {sid} has {len(sexes)} ELIGIBLE_SEX edges"
    for cid in graph.label_index.get("Condition", set()):
        incoming = [
            eid
            for eid in graph.in_edges(cid)
            if graph.edges[eid].rel_type == "HAS_CONDITION"
        ]
        assert incoming, f"condition {cid} is orphaned"


def closed_rel_set(radius: int = 1) -> set[str]:
    """Every relationship name legal in a radius-1 merged graph."""
    if radius != 1:
        raise ValueError("closed set is defined for radius 1")
    return set(HETIONET_RADIUS1_RELS) | set(CT_REL_TYPES)


__all__ = [
    "CT_NODE_LABELS",
    "CT_REL_TYPES",
    "DISEASE_METAEDGES",
    "HETIONET_RADIUS1_RELS",
    "MergeReport",
    "REFERENCE_TOTALS",
    "build_ct_graph",
    "check_ct_invariants",
    "closed_rel_set",
    "merge_graphs",
    "run_ingestion",
]
