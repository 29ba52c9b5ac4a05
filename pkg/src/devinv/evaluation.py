"""Three-level grading of extraction results and the per-task count report.

The rubric is deterministic so it can run in CI; a human override table
(tab-separated: record_id, task, score, note) always wins where present.
"""

from __future__ import annotations

import datetime as dt
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .corpus import IncidentMetadata, normalize_text
from .errors import DuplicateScored
from .extraction import TASK_ORDER, ExtractionResult, ExtractionTask, Unparsed

# artifact-chosen calibration constants, not taken from any reference data
F1_ACCURATE_THRESHOLD = 0.8
F1_ACCEPTABLE_THRESHOLD = 0.4


class Score(str, Enum):
    accurate = "accurate"
    acceptable = "acceptable"
    inaccurate = "inaccurate"

    @property
    def level(self) -> int:
        """Ordering: accurate > acceptable > inaccurate."""
        return {"accurate": 2, "acceptable": 1, "inaccurate": 0}[self.value]


@dataclass(frozen=True)
class ScoredResult:
    record_id: str
    task: ExtractionTask
    provider_id: str
    score: Score
    rationale: str
    overridden: bool = False


@dataclass(frozen=True)
class ScoreCounts:
    accurate: int = 0
    acceptable: int = 0
    inaccurate: int = 0

    def total(self) -> int:
        return self.accurate + self.acceptable + self.inaccurate

    def bump(self, score: Score) -> "ScoreCounts":
        return ScoreCounts(
            self.accurate + (score is Score.accurate),
            self.acceptable + (score is Score.acceptable),
            self.inaccurate + (score is Score.inaccurate),
        )


@dataclass(frozen=True)
class EvaluationReport:
    counts: dict[tuple[str, ExtractionTask], ScoreCounts]
    corpus_size: int


Overrides = dict[tuple[str, ExtractionTask], tuple[Score, str]]


def load_overrides(path: str | Path) -> Overrides:
    """Parse the override table: record_id<TAB>task<TAB>score<TAB>note."""
    overrides: Overrides = {}
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            if not line.strip() or line.startswith("#"):
                continue
            record_id, task, score, *note = line.rstrip("\n").split("\t")
            overrides[(record_id, ExtractionTask(task))] = (
                Score(score),
                note[0] if note else "",
            )
    return overrides


def token_f1(predicted: str, truth: str) -> float:
    """Token-overlap F1 on whitespace tokens of normalized text (multiset)."""
    pred_tokens = Counter(normalize_text(predicted).split())
    truth_tokens = Counter(normalize_text(truth).split())
    common = sum((pred_tokens & truth_tokens).values())
    denominator = sum(pred_tokens.values()) + sum(truth_tokens.values())
    if denominator == 0 or common == 0:
        return 0.0
    return 2.0 * common / denominator


def _score_date(parsed: object, truth: dt.date) -> tuple[Score, str]:
    if isinstance(parsed, dt.date) and parsed == truth:
        return Score.accurate, "date: exact match"
    if isinstance(parsed, Unparsed):
        return Score.inaccurate, "date: no recognizable date in answer"
    return Score.inaccurate, f"date: mismatch ({parsed} vs {truth})"


def _score_site(parsed: object, truth: str) -> tuple[Score, str]:
    answer = normalize_text(str(parsed))
    expected = normalize_text(truth)
    if answer == expected:
        return Score.accurate, "site: normalized equality"
    if answer and expected and (answer in expected or expected in answer):
        return Score.acceptable, "site: containment (minor-detail mismatch)"
    return Score.inaccurate, "site: no match"


def _score_batches(parsed: object, truth: tuple[str, ...]) -> tuple[Score, str]:
    answer = {b.casefold() for b in parsed} if isinstance(parsed, tuple) else set()
    expected = {b.casefold() for b in truth}
    if answer == expected and expected:
        return Score.accurate, "batches: set equality"
    if answer & expected:
        return Score.acceptable, "batches: partial overlap"
    return Score.inaccurate, "batches: disjoint or empty"


def _score_quality_impact(parsed: object, truth: str) -> tuple[Score, str]:
    if parsed == truth:
        return Score.accurate, "quality_impact: exact match"
    if truth == "indeterminate":
        return Score.acceptable, "quality_impact: no well-defined ground truth"
    return Score.inaccurate, f"quality_impact: {parsed} vs {truth}"


def _score_root_cause(parsed: object, truth: str) -> tuple[Score, str]:
    f1 = token_f1(str(parsed), truth)
    if f1 >= F1_ACCURATE_THRESHOLD:
        return Score.accurate, f"root_cause: overlap F1 {f1:.2f} >= {F1_ACCURATE_THRESHOLD}"
    if f1 >= F1_ACCEPTABLE_THRESHOLD:
        return Score.acceptable, f"root_cause: overlap F1 {f1:.2f} >= {F1_ACCEPTABLE_THRESHOLD}"
    return Score.inaccurate, f"root_cause: overlap F1 {f1:.2f} < {F1_ACCEPTABLE_THRESHOLD}"


def score_field(
    task: ExtractionTask,
    result: ExtractionResult,
    truth: IncidentMetadata,
    overrides: Overrides | None = None,
) -> ScoredResult:
    """Grade one extraction result against ground truth.

    An override for (record_id, task) dominates the automatic rules.
    """
    if result.task is not task:
        raise ValueError(f"result is for task {result.task.value}, not {task.value}")

    if overrides and (result.record_id, task) in overrides:
        score, note = overrides[(result.record_id, task)]
        return ScoredResult(
            result.record_id, task, result.provider_id, score,
            rationale=f"override: {note}" if note else "override",
            overridden=True,
        )

    if task is ExtractionTask.occurrence_date:
        score, rationale = _score_date(result.parsed, truth.occurrence_date)
    elif task is ExtractionTask.site:
        score, rationale = _score_site(result.parsed, truth.site)
    elif task is ExtractionTask.batches:
        score, rationale = _score_batches(result.parsed, truth.batches)
    elif task is ExtractionTask.quality_impact:
        score, rationale = _score_quality_impact(result.parsed, truth.quality_impact)
    else:
        score, rationale = _score_root_cause(result.parsed, truth.root_cause)
    return ScoredResult(result.record_id, task, result.provider_id, score, rationale)


def aggregate_report(scored: list[ScoredResult], corpus_size: int) -> EvaluationReport:
    """Tally counts per (provider, task); shortfalls count as inaccurate.

    Raises DuplicateScored if any (record, task, provider) appears twice.
    """
    seen: set[tuple[str, ExtractionTask, str]] = set()
    counts: dict[tuple[str, ExtractionTask], ScoreCounts] = {}
    for item in scored:
        key = (item.record_id, item.task, item.provider_id)
        if key in seen:
            raise DuplicateScored(item.record_id, item.task.value, item.provider_id)
        seen.add(key)
        bucket = (item.provider_id, item.task)
        counts[bucket] = counts.get(bucket, ScoreCounts()).bump(item.score)

    for bucket, tally in counts.items():
        if tally.total() > corpus_size:
            raise ValueError(
                f"{bucket}: {tally.total()} scored results exceed corpus size {corpus_size}"
            )
        missing = corpus_size - tally.total()
        if missing:
            counts[bucket] = ScoreCounts(
                tally.accurate, tally.acceptable, tally.inaccurate + missing
            )
    return EvaluationReport(counts=counts, corpus_size=corpus_size)


def render_report(report: EvaluationReport, fmt: str = "text") -> str:
    """Deterministic serialization, rows sorted by (provider, task order)."""
    ordered = sorted(
        report.counts.items(),
        key=lambda item: (item[0][0], TASK_ORDER.index(item[0][1])),
    )
    if fmt == "csv":
        lines = ["provider,task,accurate,acceptable,inaccurate"]
        for (provider, task), tally in ordered:
            lines.append(
                f"{provider},{task.value},{tally.accurate},"
                f"{tally.acceptable},{tally.inaccurate}"
            )
        return "\n".join(lines) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")

    width = max([len("task")] + [len(t.value) for _, t in report.counts])
    lines = []
    for (provider, task), tally in ordered:
        lines.append(
            f"{provider}  {task.value.ljust(width)}  "
            f"accurate={tally.accurate}  acceptable={tally.acceptable}  "
            f"inaccurate={tally.inaccurate}  (n={report.corpus_size})"
        )
    return "\n".join(lines) + "\n" if lines else "no scored results\n"
