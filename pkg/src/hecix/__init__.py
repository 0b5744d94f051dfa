"""HeCiX: an embedded biomedical knowledge graph with a Cypher-subset query
engine, a text-to-query answering pipeline, and retrieval evaluation metrics.
"""

from .graph import (
    EdgeRecord,
    GraphStats,
    NodeRecord,
    PropertyGraph,
    snapshot_load,
    snapshot_save,
)
from .schema import GraphSchema

__version__ = "0.1.0"

__all__ = [
    "EdgeRecord",
    "GraphSchema",
    "GraphStats",
    "NodeRecord",
    "PropertyGraph",
    "snapshot_load",
    "snapshot_save",
    "__version__",
]
