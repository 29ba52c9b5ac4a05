"""Prompt construction and typed parsing for the five extraction tasks.

Prompts follow a three-part structure (introduction, report text as
context, task question) and live in a directory of plain-text templates so
they can change without a rebuild. Parsing is deterministic and total:
failures surface as explicit markers, never exceptions.
"""

from __future__ import annotations

import datetime as dt
import re
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

from .corpus import Corpus, DeviationRecord, normalize_text
from .errors import DevinvError, MissingTemplate
from .gateway import ChatOutcome, PromptBundle, ProviderConfig, chat


class ExtractionTask(str, Enum):
    occurrence_date = "occurrence_date"
    site = "site"
    batches = "batches"
    quality_impact = "quality_impact"
    root_cause = "root_cause"


TASK_ORDER = tuple(ExtractionTask)

# Batch ids are letter-led alphanumerics of length >= 4 with at least one
# digit (plain words never contain digits); conventions differ per site, so
# the pattern is configuration.
DEFAULT_BATCH_ID_PATTERN = r"\b[A-Za-z](?=[A-Za-z0-9]*\d)[A-Za-z0-9]{3,}\b"

IMPACT_CUES = ("impact", "affected", "adulterated")
NEGATION_CUES = ("no", "not", "without")
NEGATION_WINDOW = 3


@dataclass(frozen=True)
class Unparsed:
    """Marker for an answer in which no value of the task's type was found."""

    raw: str


@dataclass(frozen=True)
class ExtractionResult:
    record_id: str
    task: ExtractionTask
    raw_answer: str
    parsed: object
    provider_id: str


@dataclass(frozen=True)
class ExtractionFailure:
    record_id: str
    task: ExtractionTask
    error: str


@dataclass(frozen=True)
class ExtractionRun:
    results: tuple[ExtractionResult, ...]
    failures: tuple[ExtractionFailure, ...]


# --- templates -----------------------------------------------------------------

@dataclass(frozen=True)
class TemplateSet:
    intro: str
    questions: dict[ExtractionTask, str]
    rag_intro: str | None = None

    @classmethod
    def load(cls, directory: str | Path) -> "TemplateSet":
        directory = Path(directory)
        intro_path = directory / "intro.txt"
        if not intro_path.exists():
            raise MissingTemplate("intro")
        questions = {}
        for task in TASK_ORDER:
            question_path = directory / f"q_{task.value}.txt"
            if question_path.exists():
                questions[task] = question_path.read_text(encoding="utf-8").strip()
        rag_intro_path = directory / "rag_intro.txt"
        rag_intro = (
            rag_intro_path.read_text(encoding="utf-8").strip()
            if rag_intro_path.exists()
            else None
        )
        return cls(
            intro=intro_path.read_text(encoding="utf-8").strip(),
            questions=questions,
            rag_intro=rag_intro,
        )


def _render(template: str, record: DeviationRecord) -> str:
    return template.replace("{{record_id}}", record.id)


def build_prompt(
    record: DeviationRecord, task: ExtractionTask, templates: TemplateSet
) -> PromptBundle:
    """Three-part bundle: shared intro, full normalized report, task question."""
    question = templates.questions.get(task)
    if question is None:
        raise MissingTemplate(task.value)
    return PromptBundle(
        intro=templates.intro,
        context=record.normalized_text,
        question=_render(question, record),
    )


# --- parsing --------------------------------------------------------------------

_MONTHS = (
    "january", "february", "march", "april", "may", "june",
    "july", "august", "september", "october", "november", "december",
)
_MONTH_NUM = {name: i + 1 for i, name in enumerate(_MONTHS)}
_MONTH_ALT = "|".join(_MONTHS)

_ISO_RE = re.compile(r"\b(\d{4})-(\d{2})-(\d{2})\b")
_DMY_RE = re.compile(
    rf"\b(\d{{1,2}})(?:st|nd|rd|th)?\s+({_MONTH_ALT})\s+(\d{{4}})\b", re.IGNORECASE
)
_MDY_RE = re.compile(
    rf"\b({_MONTH_ALT})\s+(\d{{1,2}})(?:st|nd|rd|th)?,?\s+(\d{{4}})\b", re.IGNORECASE
)


def _date_candidates(raw: str):
    for match in _ISO_RE.finditer(raw):
        yield match.start(), match.group(1), match.group(3), match.group(2)
    for match in _DMY_RE.finditer(raw):
        yield match.start(), match.group(3), match.group(1), match.group(2)
    for match in _MDY_RE.finditer(raw):
        yield match.start(), match.group(3), match.group(2), match.group(1)


def parse_date(raw: str) -> dt.date | Unparsed:
    """First recognizable date in the text, in any of the three formats."""
    candidates = sorted(_date_candidates(raw), key=lambda item: item[0])
    for _, year, day, month in candidates:
        month_num = _MONTH_NUM.get(month.lower()) if not month.isdigit() else int(month)
        try:
            return dt.date(int(year), month_num, int(day))
        except (ValueError, TypeError):
            continue
    return Unparsed(raw)


def format_date_long(value: dt.date) -> str:
    """Render as "DD Month YYYY", the round-trip form used by fixtures."""
    return f"{value.day} {_MONTHS[value.month - 1].capitalize()} {value.year}"


def parse_batches(raw: str, pattern: str = DEFAULT_BATCH_ID_PATTERN) -> tuple[str, ...]:
    """All pattern matches, deduplicated, in order of first appearance."""
    seen: dict[str, None] = {}
    for match in re.finditer(pattern, raw):
        seen.setdefault(match.group(0), None)
    return tuple(seen)


def parse_quality_impact(raw: str) -> str:
    """Tri-state from a fixed negation-window rule over normalized tokens.

    not_impacted when a negation cue sits within three tokens before an
    impact cue; impacted when an impact cue appears un-negated; otherwise
    indeterminate.
    """
    tokens = [t.strip(string.punctuation) for t in normalize_text(raw).split()]
    impact_positions = [
        i for i, t in enumerate(tokens) if any(t.startswith(cue) for cue in IMPACT_CUES)
    ]
    if not impact_positions:
        return "indeterminate"
    for pos in impact_positions:
        window = tokens[max(0, pos - NEGATION_WINDOW) : pos]
        if any(t in NEGATION_CUES for t in window):
            return "not_impacted"
    return "impacted"


def parse_answer(
    task: ExtractionTask, raw: str, batch_id_pattern: str = DEFAULT_BATCH_ID_PATTERN
) -> object:
    """Deterministic, total conversion of a free-text answer to a typed value."""
    if task is ExtractionTask.occurrence_date:
        return parse_date(raw)
    if task is ExtractionTask.site:
        lines = raw.strip().splitlines()
        return lines[0].strip() if lines else ""
    if task is ExtractionTask.batches:
        return parse_batches(raw, batch_id_pattern)
    if task is ExtractionTask.quality_impact:
        return parse_quality_impact(raw)
    return raw  # root_cause is scored downstream, not parsed


# --- gateway-facing operations -----------------------------------------------------

def extract(
    record: DeviationRecord,
    task: ExtractionTask,
    provider: ProviderConfig,
    templates: TemplateSet,
    batch_id_pattern: str = DEFAULT_BATCH_ID_PATTERN,
    transport=None,
) -> ExtractionResult:
    bundle = build_prompt(record, task, templates)
    outcome: ChatOutcome = chat(bundle, provider, transport=transport)
    return ExtractionResult(
        record_id=record.id,
        task=task,
        raw_answer=outcome.text,
        parsed=parse_answer(task, outcome.text, batch_id_pattern),
        provider_id=outcome.provider_id,
    )


def run_extraction(
    corpus: Corpus,
    tasks: Iterable[ExtractionTask],
    provider: ProviderConfig,
    templates: TemplateSet,
    batch_id_pattern: str = DEFAULT_BATCH_ID_PATTERN,
    transport=None,
) -> ExtractionRun:
    """Extract every (record, task) pair, aggregating failures per pair.

    Pairs may run concurrently up to provider.max_parallel; results come
    back in canonical (record order, task order) regardless.
    """
    wanted = set(tasks)
    ordered_tasks = [t for t in TASK_ORDER if t in wanted]
    pairs = [(record, task) for record in corpus for task in ordered_tasks]

    def run_pair(pair):
        record, task = pair
        try:
            return extract(
                record, task, provider, templates, batch_id_pattern, transport
            ), None
        except DevinvError as exc:
            return None, ExtractionFailure(record.id, task, str(exc))

    if provider.max_parallel > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=provider.max_parallel) as pool:
            outcomes = list(pool.map(run_pair, pairs))
    else:
        outcomes = [run_pair(pair) for pair in pairs]

    results = tuple(result for result, _ in outcomes if result is not None)
    failures = tuple(failure for _, failure in outcomes if failure is not None)
    return ExtractionRun(results=results, failures=failures)
