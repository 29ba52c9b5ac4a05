import datetime as dt
from collections import Counter

import pytest

from devinv.corpus import IncidentMetadata, normalize_text
from devinv.errors import DuplicateScored
from devinv.evaluation import (
    EvaluationReport,
    Score,
    ScoreCounts,
    aggregate_report,
    load_overrides,
    render_report,
    score_field,
    token_f1,
)
from devinv.extraction import ExtractionResult, ExtractionTask, Unparsed


def _truth(**overrides):
    fields = dict(
        occurrence_date=dt.date(2021, 3, 12),
        site="west point",
        batches=("A1234", "B9876"),
        quality_impact="not_impacted",
        root_cause="door gasket failure allowed warm air ingress during maintenance",
        product_line="biologics",
    )
    fields.update(overrides)
    return IncidentMetadata(**fields)


def _result(task, parsed, raw="answer", record_id="inc-900", provider="replay"):
    return ExtractionResult(
        record_id=record_id, task=task, raw_answer=raw, parsed=parsed,
        provider_id=provider,
    )


# --- token overlap F1 ---------------------------------------------------------------

def brute_force_f1(a, b):
    """Independent multiset-overlap F1: explicit min-count loop."""
    ta = normalize_text(a).split()
    tb = normalize_text(b).split()
    counts_a, counts_b = Counter(ta), Counter(tb)
    common = sum(min(counts_a[t], counts_b[t]) for t in set(ta) | set(tb))
    if not ta or not tb or common == 0:
        return 0.0
    return 2 * common / (len(ta) + len(tb))


def test_f1_handmade_sentence_pair_scores_acceptable():
    # 20 + 20 tokens sharing exactly 11 -> F1 = 22/40 = 0.55 by the oracle
    truth = (
        "the pump seal wore out because lubricant was not applied during the "
        "monthly maintenance window per procedure nine on friday"
    )
    predicted = (
        "the pump seal wore out because lubricant was not applied operators "
        "skipped greasing steps during shift change against checklist revision"
    )
    assert len(truth.split()) == 20 and len(predicted.split()) == 20
    f1 = brute_force_f1(predicted, truth)
    assert f1 == pytest.approx(0.55, abs=1e-12)
    assert token_f1(predicted, truth) == pytest.approx(f1, abs=1e-12)

    scored = score_field(
        ExtractionTask.root_cause,
        _result(ExtractionTask.root_cause, predicted),
        _truth(root_cause=truth),
    )
    assert scored.score is Score.acceptable


def test_f1_multiset_semantics():
    # repeated tokens count with multiplicity, not as sets
    assert token_f1("a a b", "a c c") == pytest.approx(2 * 1 / 6, abs=1e-12)
    assert token_f1("a a", "a a") == 1.0
    assert token_f1("", "x") == 0.0


@pytest.mark.parametrize(
    "predicted,truth,expected",
    [
        ("w x y z a b c d e f", "w x y z a b c d q r", Score.accurate),   # F1 = 0.8
        ("w x y z a p q r s t", "w x y z b c d e f g", Score.acceptable),  # F1 = 0.4
        ("w x y p q r s t u v", "w x y b c d e f g h", Score.inaccurate),  # F1 = 0.3
    ],
)
def test_f1_threshold_boundaries(predicted, truth, expected):
    scored = score_field(
        ExtractionTask.root_cause,
        _result(ExtractionTask.root_cause, predicted),
        _truth(root_cause=truth),
    )
    assert scored.score is expected


# --- per-task rules ----------------------------------------------------------------

def test_date_exact_match_accurate():
    scored = score_field(
        ExtractionTask.occurrence_date,
        _result(ExtractionTask.occurrence_date, dt.date(2021, 3, 12)),
        _truth(),
    )
    assert scored.score is Score.accurate


@pytest.mark.parametrize(
    "parsed", [dt.date(2021, 3, 13), Unparsed("no date"), "2021-03-12"]
)
def test_date_anything_else_inaccurate(parsed):
    scored = score_field(
        ExtractionTask.occurrence_date,
        _result(ExtractionTask.occurrence_date, parsed),
        _truth(),
    )
    assert scored.score is Score.inaccurate


def test_site_rules():
    task = ExtractionTask.site
    assert score_field(task, _result(task, "West  Point"), _truth()).score is Score.accurate
    assert score_field(task, _result(task, "the west point site"), _truth()).score is Score.acceptable
    assert score_field(task, _result(task, "rahway"), _truth()).score is Score.inaccurate
    assert score_field(task, _result(task, ""), _truth()).score is Score.inaccurate


def test_batches_rules():
    task = ExtractionTask.batches
    assert score_field(task, _result(task, ("a1234", "B9876")), _truth()).score is Score.accurate
    assert score_field(task, _result(task, ("A1234",)), _truth()).score is Score.acceptable
    assert score_field(task, _result(task, ("Z0000",)), _truth()).score is Score.inaccurate
    assert score_field(task, _result(task, ()), _truth()).score is Score.inaccurate


def test_quality_impact_rules():
    task = ExtractionTask.quality_impact
    assert score_field(task, _result(task, "not_impacted"), _truth()).score is Score.accurate
    indeterminate = _truth(quality_impact="indeterminate")
    assert score_field(task, _result(task, "impacted"), indeterminate).score is Score.acceptable
    assert score_field(task, _result(task, "impacted"), _truth()).score is Score.inaccurate


def test_rationale_names_rule():
    scored = score_field(
        ExtractionTask.site, _result(ExtractionTask.site, "the west point site"), _truth()
    )
    assert "containment" in scored.rationale


def test_task_result_mismatch_rejected():
    with pytest.raises(ValueError):
        score_field(ExtractionTask.site, _result(ExtractionTask.batches, ()), _truth())


# --- overrides -----------------------------------------------------------------------

def test_override_dominates():
    overrides = {("inc-900", ExtractionTask.site): (Score.accurate, "adjudicated")}
    scored = score_field(
        ExtractionTask.site, _result(ExtractionTask.site, "nowhere"), _truth(),
        overrides=overrides,
    )
    assert scored.score is Score.accurate
    assert scored.overridden
    assert "adjudicated" in scored.rationale


def test_load_overrides_fixture(fixtures_dir):
    overrides = load_overrides(fixtures_dir / "overrides.tsv")
    assert overrides[("inc-005", ExtractionTask.site)][0] is Score.accurate
    assert overrides[("inc-013", ExtractionTask.root_cause)][0] is Score.acceptable


# --- aggregation and rendering --------------------------------------------------------

def _scored(record_id, task, score, provider="replay"):
    return score_field(
        task,
        _result(task, "not_impacted" if score is Score.accurate else "impacted",
                record_id=record_id, provider=provider),
        _truth(),
    )


def test_aggregate_counts_and_sum_law():
    task = ExtractionTask.quality_impact
    scored = [_scored(f"inc-{i:03d}", task, Score.accurate) for i in range(1, 21)]
    report = aggregate_report(scored, corpus_size=20)
    counts = report.counts[("replay", task)]
    assert (counts.accurate, counts.acceptable, counts.inaccurate) == (20, 0, 0)


def test_aggregate_missing_counted_inaccurate():
    task = ExtractionTask.quality_impact
    scored = [_scored(f"inc-{i:03d}", task, Score.accurate) for i in range(1, 19)]
    report = aggregate_report(scored, corpus_size=20)
    counts = report.counts[("replay", task)]
    assert counts.total() == 20
    assert counts.inaccurate == 2


def test_aggregate_rejects_duplicates():
    task = ExtractionTask.site
    scored = [_scored("inc-001", task, Score.accurate)] * 2
    with pytest.raises(DuplicateScored):
        aggregate_report(scored, corpus_size=20)


def test_aggregate_rejects_overflow():
    task = ExtractionTask.site
    scored = [_scored(f"inc-{i:03d}", task, Score.accurate) for i in range(1, 22)]
    with pytest.raises(ValueError):
        aggregate_report(scored, corpus_size=20)


def test_render_csv_line_shape():
    report = EvaluationReport(
        counts={("replay", ExtractionTask.occurrence_date): ScoreCounts(20, 0, 0)},
        corpus_size=20,
    )
    assert render_report(report, fmt="csv") == (
        "provider,task,accurate,acceptable,inaccurate\n"
        "replay,occurrence_date,20,0,0\n"
    )


def test_render_empty_report():
    report = EvaluationReport(counts={}, corpus_size=0)
    assert render_report(report, fmt="csv") == "provider,task,accurate,acceptable,inaccurate\n"


def test_render_sorted_by_provider_then_task_order():
    counts = {
        ("zeta", ExtractionTask.occurrence_date): ScoreCounts(1, 0, 0),
        ("alpha", ExtractionTask.root_cause): ScoreCounts(1, 0, 0),
        ("alpha", ExtractionTask.site): ScoreCounts(1, 0, 0),
    }
    rows = render_report(EvaluationReport(counts, corpus_size=1), fmt="csv").splitlines()
    assert rows[1].startswith("alpha,site")
    assert rows[2].startswith("alpha,root_cause")
    assert rows[3].startswith("zeta,occurrence_date")


def test_score_ordering_levels():
    assert Score.accurate.level > Score.acceptable.level > Score.inaccurate.level
