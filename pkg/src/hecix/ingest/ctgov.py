"""Clinical-trials registry source: study documents, files, and the v2 API.

One study document (registry v2 format) normalizes into a ``StudyRecord``.
Documents can come from offline JSON files (single study or a list per file)
or be fetched live from ``/api/v2/studies``.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import requests

from ..errors import MissingField

log = logging.getLogger(__name__)

API_URL = "https://clinicaltrials.gov/api/v2/studies"

_NCT_PATTERN = re.compile(r"^NCT\d{8}$")
_SEXES = ("ALL", "FEMALE", "MALE")


@dataclass
class StudyRecord:
    nct_id: str
    title: str = ""
    status: str = ""
    conditions: list[str] = field(default_factory=list)
    phases: list[str] = field(default_factory=list)
    interventions: list[tuple[str, str]] = field(default_factory=list)  # (type, name)
    officials: list[tuple[str, str, str]] = field(default_factory=list)  # (name, role, affiliation)
    locations: list[tuple[str, str, str]] = field(default_factory=list)  # (facility, city, country)
    min_age: str = ""
    max_age: str = ""
    std_ages: list[str] = field(default_factory=list)
    sex: str = "ALL"


def _dig(document: dict, *path: str):
    value = document
    for key in path:
        if not isinstance(value, dict) or key not in value:
            return None
        value = value[key]
    return value


def parse_ctgov_study(document: dict) -> StudyRecord:
    """Normalize one registry study document.

    A missing or unusable NCT id is fatal for the record; any other absent
    block is tolerated, logged, and left empty (sex defaults to ALL).
    """
    nct_id = _dig(document, "protocolSection", "identificationModule", "nctId")
    if not isinstance(nct_id, str) or not _NCT_PATTERN.match(nct_id.strip()):
        raise MissingField("nct_id")
    nct_id = nct_id.strip()

    record = StudyRecord(nct_id=nct_id)
    title = _dig(document, "protocolSection", "identificationModule", "briefTitle")
    record.title = title if isinstance(title, str) else ""
    status = _dig(document, "protocolSection", "statusModule", "overallStatus")
    record.status = status if isinstance(status, str) else ""

    conditions = _dig(document, "protocolSection", "conditionsModule", "conditions")
    if isinstance(conditions, list):
        record.conditions = [c for c in conditions if isinstance(c, str) and c.strip()]
    else:
        log.debug("%s: no conditions block", nct_id)

    phases = _dig(document, "protocolSection", "designModule", "phases")
    if isinstance(phases, list):
        record.phases = [p for p in phases if isinstance(p, str)]

    interventions = _dig(
        document, "protocolSection", "armsInterventionsModule", "interventions"
    )
    if isinstance(interventions, list):
        for item in interventions:
            if isinstance(item, dict) and item.get("name"):
                record.interventions.append(
                    (str(item.get("type", "")), str(item["name"]))
                )

    officials = _dig(
        document, "protocolSection", "contactsLocationsModule", "overallOfficials"
    )
    if isinstance(officials, list):
        for item in officials:
            if isinstance(item, dict) and item.get("name"):
                record.officials.append(
                    (
                        str(item["name"]),
                        str(item.get("role", "")),
                        str(item.get("affiliation", "")),
                    )
                )

    locations = _dig(document, "protocolSection", "contactsLocationsModule", "locations")
    if isinstance(locations, list):
        for item in locations:
            if isinstance(item, dict) and item.get("facility"):
                record.locations.append(
                    (
                        str(item["facility"]),
                        str(item.get("city", "")),
                        str(item.get("country", "")),
                    )
                )

    eligibility = _dig(document, "protocolSection", "eligibilityModule")
    if isinstance(eligibility, dict):
        record.min_age = str(eligibility.get("minimumAge", "") or "")
        record.max_age = str(eligibility.get("maximumAge", "") or "")
        std_ages = eligibility.get("stdAges")
        if isinstance(std_ages, list):
            record.std_ages = [a for a in std_ages if isinstance(a, str)]
        sex = str(eligibility.get("sex", "") or "").upper()
        record.sex = sex if sex in _SEXES else "ALL"
    else:
        log.debug("%s: no eligibility block, sex defaults to ALL", nct_id)

    return record


# -- offline documents ---------------------------------------------------------


def iter_study_documents(directory) -> Iterator[dict]:
    """Yield study documents from ``*.json`` files, sorted by file name.

    A file may hold one document, a list of documents, or a v2 API page
    (object with a ``studies`` array).
    """
    for path in sorted(Path(directory).glob("*.json")):
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if isinstance(payload, dict) and "studies" in payload:
            payload = payload["studies"]
        if isinstance(payload, dict):
            payload = [payload]
        for document in payload:
            yield document


def load_study_records(
    directory, nct_ids: Optional[set[str]] = None
) -> list[StudyRecord]:
    """Parse every document in a directory; malformed records are skipped."""
    records: list[StudyRecord] = []
    seen: set[str] = set()
    for document in iter_study_documents(directory):
        try:
            record = parse_ctgov_study(document)
        except MissingField as exc:
            log.warning("skipping record: %s", exc)
            continue
        if nct_ids is not None and record.nct_id not in nct_ids:
            continue
        if record.nct_id in seen:
            continue
        seen.add(record.nct_id)
        records.append(record)
    return records


# -- live registry -------------------------------------------------------------


def fetch_studies(
    condition: str,
    max_records: int = 200,
    page_size: int = 100,
    timeout: float = 30.0,
    session: Optional[requests.Session] = None,
) -> list[dict]:
    """Fetch study documents for one condition term from the registry API."""
    http = session or requests.Session()
    documents: list[dict] = []
    page_token: Optional[str] = None
    while len(documents) < max_records:
        params = {
            "query.cond": condition,
            "pageSize": min(page_size, max_records - len(documents)),
        }
        if page_token:
            params["pageToken"] = page_token
        response = http.get(API_URL, params=params, timeout=timeout)
        response.raise_for_status()
        payload = response.json()
        documents.extend(payload.get("studies", []))
        page_token = payload.get("nextPageToken")
        if not page_token:
            break
    return documents[:max_records]
