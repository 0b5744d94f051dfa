"""Source parsing and graph construction for the two data sources."""

from .build import (
    CT_NODE_LABELS,
    CT_REL_TYPES,
    HETIONET_RADIUS1_RELS,
    MergeReport,
    REFERENCE_TOTALS,
    build_ct_graph,
    check_ct_invariants,
    closed_rel_set,
    merge_graphs,
    run_ingestion,
)
from .ctgov import (
    StudyRecord,
    fetch_studies,
    load_study_records,
    parse_ctgov_study,
)
from .diseases import DiseaseSpec, default_disease_specs, load_disease_specs, normalize_condition
from .hetionet import (
    DISEASE_METAEDGES,
    NODE_KINDS,
    SourceEdge,
    SourceNode,
    extract_disease_subgraph,
    parse_hetionet,
    rel_type_name,
)

__all__ = [
    "CT_NODE_LABELS",
    "CT_REL_TYPES",
    "DISEASE_METAEDGES",
    "DiseaseSpec",
    "HETIONET_RADIUS1_RELS",
    "MergeReport",
    "NODE_KINDS",
    "REFERENCE_TOTALS",
    "SourceEdge",
    "SourceNode",
    "StudyRecord",
    "build_ct_graph",
    "check_ct_invariants",
    "closed_rel_set",
    "default_disease_specs",
    "extract_disease_subgraph",
    "fetch_studies",
    "load_disease_specs",
    "load_study_records",
    "merge_graphs",
    "normalize_condition",
    "parse_ctgov_study",
    "parse_hetionet",
    "rel_type_name",
    "run_ingestion",
]
