"""Deviation-record data model, corpus ingestion, and text normalization.

A corpus is a UTF-8 line-delimited JSON file, one record per line. The
`normalized_text` field is always derived from `raw_text` on ingest and is
never persisted.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .errors import DuplicateId, MalformedRecord

QUALITY_IMPACT_STATES = ("impacted", "not_impacted", "indeterminate")


def normalize_text(raw: str) -> str:
    """Lowercase and collapse every whitespace run to a single space.

    Total and idempotent; an empty or all-whitespace input yields "".
    """
    return " ".join(raw.lower().split())


@dataclass(frozen=True)
class IncidentMetadata:
    """Ground truth for the five extraction tasks plus filterable attributes."""

    occurrence_date: dt.date
    site: str
    batches: tuple[str, ...]
    quality_impact: str
    root_cause: str
    product_line: str
    extra: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class DeviationRecord:
    """One historical incident: the full report plus its description paragraph."""

    id: str
    raw_text: str
    normalized_text: str
    description: str
    metadata: IncidentMetadata


@dataclass(frozen=True)
class Corpus:
    records: tuple[DeviationRecord, ...]
    source_path: str

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DeviationRecord]:
        return iter(self.records)

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def get(self, record_id: str) -> DeviationRecord | None:
        return self._by_id.get(record_id)

    @property
    def _by_id(self) -> dict[str, DeviationRecord]:
        cached = getattr(self, "_by_id_cache", None)
        if cached is None:
            cached = {r.id: r for r in self.records}
            object.__setattr__(self, "_by_id_cache", cached)
        return cached


def _parse_metadata(obj: dict, line_no: int) -> IncidentMetadata:
    try:
        occurrence_date = dt.date.fromisoformat(str(obj["occurrence_date"]))
    except KeyError:
        raise MalformedRecord(line_no, "metadata.occurrence_date missing")
    except ValueError:
        raise MalformedRecord(
            line_no, f"metadata.occurrence_date not ISO-8601: {obj['occurrence_date']!r}"
        )
    quality_impact = obj.get("quality_impact")
    if quality_impact not in QUALITY_IMPACT_STATES:
        raise MalformedRecord(
            line_no, f"metadata.quality_impact invalid: {quality_impact!r}"
        )
    batches = obj.get("batches", [])
    if not isinstance(batches, list) or not all(isinstance(b, str) for b in batches):
        raise MalformedRecord(line_no, "metadata.batches must be an array of strings")
    extra = obj.get("extra", {})
    if not isinstance(extra, dict):
        raise MalformedRecord(line_no, "metadata.extra must be a string map")
    return IncidentMetadata(
        occurrence_date=occurrence_date,
        site=str(obj.get("site", "")),
        batches=tuple(batches),
        quality_impact=quality_impact,
        root_cause=str(obj.get("root_cause", "")),
        product_line=str(obj.get("product_line", "")),
        extra={str(k): str(v) for k, v in extra.items()},
    )


def parse_record_line(line: str, line_no: int) -> DeviationRecord:
    """Parse one corpus line into a record, recomputing normalized_text."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}")
    if not isinstance(obj, dict):
        raise MalformedRecord(line_no, "record must be a JSON object")

    record_id = obj.get("id")
    if not isinstance(record_id, str) or not record_id.strip():
        raise MalformedRecord(line_no, "id missing or empty")
    if "raw_text" not in obj:
        raise MalformedRecord(line_no, "raw_text missing")
    if "metadata" not in obj or not isinstance(obj["metadata"], dict):
        raise MalformedRecord(line_no, "metadata missing")

    raw_text = str(obj["raw_text"])
    return DeviationRecord(
        id=record_id.strip(),
        raw_text=raw_text,
        normalized_text=normalize_text(raw_text),
        description=str(obj.get("description", "")),
        metadata=_parse_metadata(obj["metadata"], line_no),
    )


def ingest_corpus(path: str | Path) -> Corpus:
    """Load a line-delimited corpus file, preserving file order.

    Raises MalformedRecord on an unparsable line and DuplicateId when two
    records share an id. An empty file yields an empty corpus.
    """
    path = Path(path)
    records: list[DeviationRecord] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = parse_record_line(line, line_no)
            if record.id in seen:
                raise DuplicateId(record.id)
            seen.add(record.id)
            records.append(record)
    return Corpus(records=tuple(records), source_path=str(path))


def record_to_json(record: DeviationRecord) -> str:
    """Serialize one record to its canonical JSON line (no normalized_text)."""
    meta = record.metadata
    obj = {
        "id": record.id,
        "raw_text": record.raw_text,
        "description": record.description,
        "metadata": {
            "occurrence_date": meta.occurrence_date.isoformat(),
            "site": meta.site,
            "batches": list(meta.batches),
            "quality_impact": meta.quality_impact,
            "root_cause": meta.root_cause,
            "product_line": meta.product_line,
            "extra": dict(meta.extra),
        },
    }
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Re-serialize a corpus; ingest(write(ingest(p))) round-trips exactly."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for record in corpus.records:
            handle.write(record_to_json(record) + "\n")


def validate_record(record: DeviationRecord) -> list[str]:
    """Return violation descriptions; empty list iff all invariants hold."""
    violations: list[str] = []
    if not record.id.strip():
        violations.append("id: empty")
    if record.normalized_text != normalize_text(record.raw_text):
        violations.append("normalized_text: stale (not derived from raw_text)")
    if not record.description.strip():
        violations.append("description: empty")
    meta = record.metadata
    seen: set[str] = set()
    for batch in meta.batches:
        if batch in seen:
            violations.append(f"batches: duplicate entry {batch}")
        seen.add(batch)
    if meta.quality_impact not in QUALITY_IMPACT_STATES:
        violations.append(f"quality_impact: invalid value {meta.quality_impact!r}")
    return violations


def validate_corpus(corpus: Corpus) -> dict[str, list[str]]:
    """Map of record id to its violations, for records that have any."""
    report: dict[str, list[str]] = {}
    for record in corpus.records:
        violations = validate_record(record)
        if violations:
            report[record.id] = violations
    return report
