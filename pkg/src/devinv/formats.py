"""Canonical machine-format renderers shared by the CLI and the service.

Both surfaces emit these byte-for-byte, which is what makes CLI/service
parity testable. Floats use round-trip repr; multi-valued cells join with
";" inside standard csv quoting.
"""

from __future__ import annotations

import csv
import datetime as dt
import io

from .corpus import DeviationRecord
from .extraction import ExtractionResult, Unparsed
from .index import RetrievalHit, SimilarityMatrix, matrix_to_csv
from .rag import AnswerWithCitations


def _csv_rows(header: list[str], rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def hits_to_csv(hits: list[RetrievalHit]) -> str:
    return _csv_rows(
        ["rank", "record_id", "similarity"],
        [[str(h.rank), h.record_id, repr(float(h.similarity))] for h in hits],
    )


def hits_to_text(hits: list[RetrievalHit]) -> str:
    if not hits:
        return "no matching records\n"
    lines = [f"{h.rank:>3}  {h.record_id}  similarity={h.similarity:.6f}" for h in hits]
    return "\n".join(lines) + "\n"


def parsed_to_str(parsed: object) -> str:
    if isinstance(parsed, Unparsed):
        return "<unparsed>"
    if isinstance(parsed, dt.date):
        return parsed.isoformat()
    if isinstance(parsed, tuple):
        return ";".join(parsed)
    return str(parsed)


def extraction_to_csv(results: list[ExtractionResult]) -> str:
    return _csv_rows(
        ["record_id", "task", "provider", "parsed", "raw_answer"],
        [
            [r.record_id, r.task.value, r.provider_id, parsed_to_str(r.parsed), r.raw_answer]
            for r in results
        ],
    )


def extraction_to_text(results: list[ExtractionResult]) -> str:
    lines = [
        f"{r.record_id}  {r.task.value}: {parsed_to_str(r.parsed)}" for r in results
    ]
    return "\n".join(lines) + "\n" if lines else "no results\n"


def answer_to_csv(answer: AnswerWithCitations) -> str:
    return _csv_rows(
        ["mode", "cited_record_ids", "notice", "text"],
        [[answer.mode, ";".join(answer.cited_record_ids),
          answer.notice or "", answer.text]],
    )


def answer_to_text(answer: AnswerWithCitations) -> str:
    lines = [answer.text, "", f"mode: {answer.mode}"]
    if answer.cited_record_ids:
        lines.append("citations: " + ", ".join(answer.cited_record_ids))
    if answer.notice:
        lines.append(f"notice: {answer.notice}")
    return "\n".join(lines) + "\n"


def matrix_to_text(matrix: SimilarityMatrix) -> str:
    lines = ["            " + "  ".join(f"{rid:>8}" for rid in matrix.ids)]
    for i, record_id in enumerate(matrix.ids):
        cells = "  ".join(f"{v:8.4f}" for v in matrix.values[i])
        lines.append(f"{record_id:>12}  {cells}")
    return "\n".join(lines) + "\n"


def record_to_dict(record: DeviationRecord) -> dict:
    meta = record.metadata
    return {
        "id": record.id,
        "raw_text": record.raw_text,
        "normalized_text": record.normalized_text,
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


def hit_to_dict(hit: RetrievalHit) -> dict:
    return {"rank": hit.rank, "record_id": hit.record_id, "similarity": hit.similarity}


def extraction_to_dict(result: ExtractionResult) -> dict:
    return {
        "record_id": result.record_id,
        "task": result.task.value,
        "provider_id": result.provider_id,
        "raw_answer": result.raw_answer,
        "parsed": parsed_to_str(result.parsed),
    }


def answer_to_dict(answer: AnswerWithCitations) -> dict:
    return {
        "text": answer.text,
        "mode": answer.mode,
        "cited_record_ids": list(answer.cited_record_ids),
        "hits": [hit_to_dict(h) for h in answer.hits],
        "notice": answer.notice,
    }


# re-exported so both surfaces import one module for machine formats
__all__ = [
    "answer_to_csv", "answer_to_dict", "answer_to_text",
    "extraction_to_csv", "extraction_to_dict", "extraction_to_text",
    "hit_to_dict", "hits_to_csv", "hits_to_text",
    "matrix_to_csv", "matrix_to_text", "parsed_to_str", "record_to_dict",
]
