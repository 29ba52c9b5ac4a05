"""Retrieval-augmented answering over the incident knowledge base.

Two modes: zero-shot (question only, no context) and rag (retrieve related
records, pack them into the prompt context in rank order, then generate).
Every answer keeps its full prompt bundle for audit.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .corpus import Corpus, DeviationRecord
from .errors import UnknownRecordId
from .gateway import PromptBundle, ProviderConfig, chat
from .index import Index, RetrievalHit, RetrievalQuery, search

TRUNCATION_MARKER = " [truncated]"
DEFAULT_DOC_HEADER = "--- record {record_id} (similarity {similarity:.4f}) ---\n"
EMPTY_RETRIEVAL_NOTICE = "no related records found; answered zero-shot"

DRAFT_INTRO = (
    "you are assisting with pharmaceutical manufacturing deviation records. "
    "use only the provided report text."
)
DRAFT_QUESTION = (
    "draft one short paragraph describing this incident, suitable for "
    "indexing and similarity search. reply with the paragraph only."
)


@dataclass(frozen=True)
class ContextBudget:
    max_chars: int
    per_doc_header: str = DEFAULT_DOC_HEADER

    def __post_init__(self):
        if self.max_chars < len(self.render_header(RetrievalHit("x", 0.0, 1))):
            raise ValueError("max_chars smaller than a single document header")

    def render_header(self, hit: RetrievalHit) -> str:
        return self.per_doc_header.format(
            rank=hit.rank, record_id=hit.record_id, similarity=hit.similarity
        )


@dataclass(frozen=True)
class AnswerWithCitations:
    text: str
    cited_record_ids: tuple[str, ...]
    mode: str  # "zero_shot" | "rag"
    hits: tuple[RetrievalHit, ...]
    bundle: PromptBundle
    notice: str | None = None

    def __post_init__(self):
        if self.mode == "zero_shot":
            if self.cited_record_ids or self.hits:
                raise ValueError("zero_shot answers cannot cite records")
        elif self.mode == "rag":
            if self.cited_record_ids != tuple(h.record_id for h in self.hits):
                raise ValueError("citations must equal hit ids in rank order")
        else:
            raise ValueError(f"unknown answer mode {self.mode!r}")


def answer_zero_shot(
    question: str, provider: ProviderConfig, transport=None
) -> AnswerWithCitations:
    """Send the question alone, with no supporting context."""
    if not question.strip():
        raise ValueError("question must be non-empty")
    bundle = PromptBundle(intro="", context="", question=question)
    outcome = chat(bundle, provider, transport=transport)
    return AnswerWithCitations(
        text=outcome.text,
        cited_record_ids=(),
        mode="zero_shot",
        hits=(),
        bundle=bundle,
    )


def _pack_context(
    hits: list[RetrievalHit], corpus: Corpus, budget: ContextBudget
) -> tuple[str, list[RetrievalHit]]:
    """Pack whole documents in rank order; only rank-1 may be truncated."""
    assembled = ""
    included: list[RetrievalHit] = []
    for hit in hits:
        record: DeviationRecord | None = corpus.get(hit.record_id)
        if record is None:
            raise UnknownRecordId(hit.record_id)
        block = budget.render_header(hit) + record.normalized_text
        candidate = assembled + ("\n\n" if assembled else "") + block
        if len(candidate) <= budget.max_chars:
            assembled = candidate
            included.append(hit)
            continue
        if not included:
            room = budget.max_chars - len(TRUNCATION_MARKER)
            assembled = block[: max(0, room)] + TRUNCATION_MARKER
            assembled = assembled[: budget.max_chars]
            included.append(hit)
        break
    return assembled, included


def assemble_context(
    hits: list[RetrievalHit], corpus: Corpus, budget: ContextBudget
) -> str:
    """Retrieved records in rank order, each under its header, within budget."""
    return _pack_context(hits, corpus, budget)[0]


def answer_with_retrieval(
    question: str,
    index: Index,
    corpus: Corpus,
    chat_provider: ProviderConfig,
    embed_provider: ProviderConfig,
    query_opts: RetrievalQuery | None = None,
    budget: ContextBudget | None = None,
    rag_intro: str = "",
    transport=None,
) -> AnswerWithCitations:
    """Retrieve related records, pack them as context, and generate.

    `query_opts` carries retrieval options; its text is replaced by the
    question. Citations are exactly the records that fit in the packed
    context, in rank order. When retrieval returns nothing, falls back to
    zero-shot with an explicit notice.
    """
    opts = query_opts or RetrievalQuery(text=question)
    query = dataclasses.replace(opts, text=question)
    budget = budget or ContextBudget(max_chars=8000)

    hits = search(index, corpus, query, embed_provider, transport=transport)
    if not hits:
        fallback = answer_zero_shot(question, chat_provider, transport=transport)
        return dataclasses.replace(fallback, notice=EMPTY_RETRIEVAL_NOTICE)

    context, included = _pack_context(hits, corpus, budget)
    bundle = PromptBundle(intro=rag_intro, context=context, question=question)
    outcome = chat(bundle, chat_provider, transport=transport)
    return AnswerWithCitations(
        text=outcome.text,
        cited_record_ids=tuple(h.record_id for h in included),
        mode="rag",
        hits=tuple(included),
        bundle=bundle,
    )


def draft_description(
    record: DeviationRecord, provider: ProviderConfig, transport=None
) -> str:
    """Model-drafted description paragraph; never written back automatically."""
    bundle = PromptBundle(
        intro=DRAFT_INTRO, context=record.normalized_text, question=DRAFT_QUESTION
    )
    return chat(bundle, provider, transport=transport).text


def question_digest(question: str) -> str:
    return hashlib.sha256(question.encode("utf-8")).hexdigest()


def append_audit_entry(
    path: str | Path,
    answer: AnswerWithCitations,
    provider_id: str,
    clock: Callable[[], float] = time.time,
) -> None:
    """Append one line-delimited audit record for a generated answer."""
    entry = {
        "timestamp": clock(),
        "mode": answer.mode,
        "question_digest": question_digest(answer.bundle.question),
        "cited_record_ids": list(answer.cited_record_ids),
        "provider_id": provider_id,
    }
    with Path(path).open("a", encoding="utf-8") as handle:
        handle.write(json.dumps(entry, ensure_ascii=False) + "\n")
