"""Disease roster: canonical names, ontology keys, and registry search terms."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Optional

from ..errors import MalformedRecord


@dataclass(frozen=True)
class DiseaseSpec:
    canonical_name: str
    hetionet_key: str
    ctgov_terms: tuple[str, ...]


def load_disease_specs(path) -> list[DiseaseSpec]:
    """Read the tab-separated roster: name, ontology key, comma-joined terms."""
    specs: list[DiseaseSpec] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise MalformedRecord(
                    f"expected 3 tab-separated fields, got {len(fields)}",
                    f"line {lineno}",
                )
            name, key, terms_field = (field.strip() for field in fields)
            terms = tuple(t.strip() for t in terms_field.split(",") if t.strip())
            if not name or not terms:
                raise MalformedRecord("empty name or term list", f"line {lineno}")
            if name.casefold() in seen:
                raise MalformedRecord(f"duplicate disease {name!r}", f"line {lineno}")
            seen.add(name.casefold())
            specs.append(DiseaseSpec(name, key, terms))
    return specs


def default_disease_specs() -> list[DiseaseSpec]:
    """The six-disease roster shipped with the package."""
    ref = resources.files("hecix").joinpath("data/diseases.tsv")
    with resources.as_file(ref) as path:
        return load_disease_specs(path)


def normalize_condition(
    text: str, specs: Iterable[DiseaseSpec]
) -> Optional[str]:
    """Map raw condition text to a canonical disease name, or None.

    A spec matches when any of its search terms appears in the text as a
    whole phrase (case-insensitive, word boundaries respected).  The first
    matching spec in roster order wins.
    """
    folded = text.casefold()
    for spec in specs:
        for term in spec.ctgov_terms:
            pattern = r"(?<!\w)" + re.escape(term.casefold()) + r"(?!\w)"
            if re.search(pattern, folded):
                return spec.canonical_name
    return None
