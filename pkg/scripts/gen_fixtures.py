#!/usr/bin/env python3
"""Regenerate the committed fixtures under fixtures/.

Authored data lives here as literals: the 20-record corpus, the scripted
answer for every (record, task) pair together with its hand-assigned
expected score, and the retrieval-augmented question cases. The script
derives the transcript file (prompt-bundle digest -> scripted response),
the expected per-pair score table, and the expected report counts.

Run from the repository root after changing prompts, fixtures, or the
context-assembly code:

    python3 scripts/gen_fixtures.py
"""

from __future__ import annotations

import json
import sys
from collections import Counter
from pathlib import Path

import yaml

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from devinv.corpus import ingest_corpus  # noqa: E402
from devinv.extraction import TASK_ORDER, TemplateSet, build_prompt  # noqa: E402
from devinv.gateway import ProviderConfig, PromptBundle, TranscriptStore, bundle_digest  # noqa: E402
from devinv.index import RetrievalQuery, build_index, search  # noqa: E402
from devinv.rag import DRAFT_INTRO, DRAFT_QUESTION, ContextBudget, _pack_context  # noqa: E402

FIXTURES = REPO / "fixtures"

# --- the 20-record corpus ----------------------------------------------------
# Designed related pairs (0-based file positions, mirroring the shipped
# similarity-map structure): (0, 9) visible particle, (3, 5) particle false
# rejects, (13, 19) glass breakage.

RECORDS = [
    {
        "id": "inc-001",
        "raw_text": (
            "On 12 March 2021, during routine visual inspection of batch A1234 at the "
            "Rahway site, an operator identified a dark visible particle inside a sealed "
            "vial. The unit was segregated and classified as a particle defect.  One "
            "hundred percent re-inspection of the remaining units was performed with no "
            "further defects observed. There was no impact to product quality.\n"
            "The investigation concluded that stopper debris shed by a worn feeder bowl "
            "introduced visible particles during filling. The feeder bowl was replaced "
            "and the preventive maintenance schedule was revised."
        ),
        "description": (
            "during routine visual inspection a dark visible particle was identified "
            "inside a sealed vial and the unit was categorized as a particle defect"
        ),
        "metadata": {
            "occurrence_date": "2021-03-12",
            "site": "rahway",
            "batches": ["A1234"],
            "quality_impact": "not_impacted",
            "root_cause": (
                "stopper debris shed by a worn feeder bowl introduced visible "
                "particles during filling"
            ),
            "product_line": "sterile-injectables",
            "extra": {"classification": "minor"},
        },
    },
    {
        "id": "inc-002",
        "raw_text": (
            "A temperature excursion was recorded in cold room 3 at the West Point site "
            "on 2021-05-02, with staged batches B2201 and B2202 present. The room "
            "temperature reached 11 degrees for approximately 40 minutes during a "
            "maintenance activity. Product stability data could not fully establish "
            "whether the excursion affected the material, and the quality impact "
            "assessment remained open pending a stability study.\n"
            "The root cause was a door gasket failure that allowed warm air ingress "
            "during maintenance. The gasket was replaced and door checks were added."
        ),
        "description": (
            "a temperature excursion in a cold room affected staged material when a "
            "door gasket failed during maintenance"
        ),
        "metadata": {
            "occurrence_date": "2021-05-02",
            "site": "west point",
            "batches": ["B2201", "B2202"],
            "quality_impact": "indeterminate",
            "root_cause": "door gasket failure allowed warm air ingress during maintenance",
            "product_line": "biologics",
            "extra": {"classification": "minor"},
        },
    },
    {
        "id": "inc-003",
        "raw_text": (
            "During packaging line clearance on June 18, 2021 at the Cork site, two "
            "different label reels were found loaded on the labeller for batch C3101. "
            "A mixed-label risk could not be excluded for part of the run and the batch "
            "was rejected; product quality was impacted.\n"
            "The investigation identified that an operator loaded two label reels "
            "without a line clearance check. Line clearance procedures were retrained "
            "and a second-person verification step was added."
        ),
        "description": (
            "two different label reels were found loaded on the packaging labeller "
            "after line clearance was missed creating a mixed label risk"
        ),
        "metadata": {
            "occurrence_date": "2021-06-18",
            "site": "cork",
            "batches": ["C3101"],
            "quality_impact": "impacted",
            "root_cause": "operator loaded two label reels without a line clearance check",
            "product_line": "oral-solids",
            "extra": {"classification": "critical"},
        },
    },
    {
        "id": "inc-004",
        "raw_text": (
            "On 9 August 2021, during automated inspection of batch D4150 at the Rahway "
            "site, the particle rejects function surpassed its process control limit. "
            "Examination of the rejected units demonstrated that creation of excess "
            "microbubbles from a misadjusted fill nozzle triggered false particle "
            "rejects; the rejected units contained no actual defects. There was no "
            "impact to product quality.\n"
            "The fill nozzle was readjusted and the inspection recipe was revalidated."
        ),
        "description": (
            "the particle rejects function surpassed its process control limit during "
            "automated inspection because excess microbubbles caused false rejects of "
            "good units"
        ),
        "metadata": {
            "occurrence_date": "2021-08-09",
            "site": "rahway",
            "batches": ["D4150"],
            "quality_impact": "not_impacted",
            "root_cause": (
                "excess microbubbles from a misadjusted fill nozzle triggered false "
                "particle rejects"
            ),
            "product_line": "sterile-injectables",
            "extra": {"classification": "minor"},
        },
    },
    {
        "id": "inc-005",
        "raw_text": (
            "A filter integrity test failure was recorded for batch E5012 at the Durham "
            "site on 2021-09-27. The post-use integrity test of the sterilizing filter "
            "failed the bubble point specification. Because redundant filtration was in "
            "place, a definitive quality impact could not be established and the "
            "assessment remained indeterminate.\n"
            "The root cause was that the filter housing o-ring was nicked during "
            "assembly. Assembly instructions were updated with a visual check of the "
            "o-ring."
        ),
        "description": (
            "a post use sterilizing filter failed its integrity test after the housing "
            "o-ring was nicked during assembly"
        ),
        "metadata": {
            "occurrence_date": "2021-09-27",
            "site": "durham",
            "batches": ["E5012"],
            "quality_impact": "indeterminate",
            "root_cause": "filter housing o-ring was nicked during assembly",
            "product_line": "biologics",
            "extra": {"classification": "major"},
        },
    },
    {
        "id": "inc-006",
        "raw_text": (
            "During batch reconciliation for batch F6220 at the West Point site on "
            "November 15, 2021, the particle rejects process control limit was "
            "exceeded. The exceedance was demonstrated to be false rejection of "
            "acceptable units, caused by camera sensitivity drift on the automated "
            "inspection machine. No impact to product quality resulted.\n"
            "The camera was recalibrated and a drift check was added to the daily "
            "start-up procedure."
        ),
        "description": (
            "batch reconciliation showed the particle rejects process control limit "
            "was exceeded and the exceedance was demonstrated to be false rejects of "
            "acceptable units"
        ),
        "metadata": {
            "occurrence_date": "2021-11-15",
            "site": "west point",
            "batches": ["F6220"],
            "quality_impact": "not_impacted",
            "root_cause": "camera sensitivity drift caused false rejection of acceptable units",
            "product_line": "sterile-injectables",
            "extra": {"classification": "minor"},
        },
    },
    {
        "id": "inc-007",
        "raw_text": (
            "On 20 January 2022, a metal detector alarm stopped the tablet packaging "
            "run of batch G7301 at the Cork site. A fragment of a worn sieve screen had "
            "entered the granulation upstream. The implicated portion of the run was "
            "isolated and destroyed; the remainder passed inspection and there was no "
            "impact to product quality.\n"
            "The sieve screen was replaced and screen integrity checks were added to "
            "the batch record."
        ),
        "description": (
            "a metal detector alarm stopped a tablet packaging run after a fragment of "
            "a worn sieve screen entered the granulation"
        ),
        "metadata": {
            "occurrence_date": "2022-01-20",
            "site": "cork",
            "batches": ["G7301"],
            "quality_impact": "not_impacted",
            "root_cause": "a fragment of a worn sieve screen entered the granulation",
            "product_line": "oral-solids",
            "extra": {"classification": "major"},
        },
    },
    {
        "id": "inc-008",
        "raw_text": (
            "A site wide power interruption occurred at the Durham site on 2022-02-14 "
            "during a storm, with in-process batches H8110 and H8111 at risk. Backup "
            "generators restored critical utilities within 18 minutes. Hold-time and "
            "environmental data were reviewed; a definitive conclusion on quality "
            "impact could not be reached for one intermediate hold step and the "
            "assessment remained open.\n"
            "The root cause was a utility feeder fault during the storm that caused a "
            "site wide power interruption."
        ),
        "description": (
            "a site wide power interruption during a storm affected in process "
            "material until backup generators restored critical utilities"
        ),
        "metadata": {
            "occurrence_date": "2022-02-14",
            "site": "durham",
            "batches": ["H8110", "H8111"],
            "quality_impact": "indeterminate",
            "root_cause": (
                "utility feeder fault during storm caused a site wide power interruption"
            ),
            "product_line": "biologics",
            "extra": {"classification": "major"},
        },
    },
    {
        "id": "inc-009",
        "raw_text": (
            "During capping of batch I9205 at the Rahway site on March 1, 2022, an "
            "operator observed one broken vial on the discharge conveyor and small "
            "fragments of glass near the capping head. The surrounding units were "
            "rejected and the line was cleared. Glass contamination risk to adjacent "
            "units could not be excluded and product quality was impacted for the "
            "implicated segment.\n"
            "The investigation found that a capping head misalignment chipped the vial "
            "neck. The capping head was realigned and torque checks were reinstated."
        ),
        "description": (
            "one broken vial with a chipped neck was found at capping and surrounding "
            "units were rejected after fragments were observed"
        ),
        "metadata": {
            "occurrence_date": "2022-03-01",
            "site": "rahway",
            "batches": ["I9205"],
            "quality_impact": "impacted",
            "root_cause": "capping head misalignment chipped the vial neck",
            "product_line": "sterile-injectables",
            "extra": {"classification": "major"},
        },
    },
    {
        "id": "inc-010",
        "raw_text": (
            "On 23 May 2022, during manual visual inspection of finished units of "
            "batch J1320 at the West Point site, a visible particle was identified in "
            "one unit near the stopper area and the unit was categorized as a particle "
            "defect. Extended sampling of the batch found no additional defects and "
            "there was no impact to product quality.\n"
            "The investigation concluded that a fiber from a cleaning wipe remained in "
            "the stopper hopper. Wipe specifications were changed to a low-lint grade."
        ),
        "description": (
            "a visible particle was identified during manual visual inspection of "
            "finished units and the unit was categorized as a particle defect near the "
            "stopper"
        ),
        "metadata": {
            "occurrence_date": "2022-05-23",
            "site": "west point",
            "batches": ["J1320"],
            "quality_impact": "not_impacted",
            "root_cause": "a fiber from a cleaning wipe remained in the stopper hopper",
            "product_line": "sterile-injectables",
            "extra": {"classification": "minor"},
        },
    },
    {
        "id": "inc-011",
        "raw_text": (
            "A pH result out of specification was obtained for buffer preparation of "
            "batch K2410 at the Durham site on 2022-07-07. The buffer had already been "
            "used in processing before the result was confirmed, and product quality "
            "was impacted; the batch was rejected.\n"
            "The root cause was that buffer preparation used an expired calibration on "
            "the ph meter. Calibration status checks were added to the electronic "
            "batch record."
        ),
        "description": (
            "a buffer ph result out of specification was traced to an expired "
            "calibration on the ph meter"
        ),
        "metadata": {
            "occurrence_date": "2022-07-07",
            "site": "durham",
            "batches": ["K2410"],
            "quality_impact": "impacted",
            "root_cause": "buffer preparation used an expired calibration on the ph meter",
            "product_line": "biologics",
            "extra": {"classification": "critical"},
        },
    },
    {
        "id": "inc-012",
        "raw_text": (
            "On August 30, 2022, a humidity excursion was recorded in the finished "
            "goods warehouse at the Cork site holding batch L3501. Relative humidity "
            "reached 72 percent for six hours. Packaging integrity protects the "
            "product from short excursions and there was no impact to product "
            "quality.\n"
            "The root cause was that the hvac dehumidifier coil froze after a "
            "refrigerant leak. The refrigerant circuit was repaired and an alarm "
            "setpoint was added."
        ),
        "description": (
            "a humidity excursion in the finished goods warehouse occurred after the "
            "hvac dehumidifier coil froze"
        ),
        "metadata": {
            "occurrence_date": "2022-08-30",
            "site": "cork",
            "batches": ["L3501"],
            "quality_impact": "not_impacted",
            "root_cause": "hvac dehumidifier coil froze after a refrigerant leak",
            "product_line": "oral-solids",
            "extra": {"classification": "minor"},
        },
    },
    {
        "id": "inc-013",
        "raw_text": (
            "During staging for filling of batch M4620 at the Rahway site on 11 "
            "October 2022, the wrong stopper lot was found staged in the airlock. The "
            "error was caught before use; however, traceability review could not fully "
            "exclude that a small quantity from the wrong lot was used on a prior "
            "batch, so the quality impact assessment remained indeterminate.\n"
            "The root cause was that the warehouse picklist showed a superseded "
            "material code. The material master data was corrected."
        ),
        "description": (
            "the wrong stopper lot was found staged in the airlock because the "
            "warehouse picklist showed a superseded material code"
        ),
        "metadata": {
            "occurrence_date": "2022-10-11",
            "site": "rahway",
            "batches": ["M4620"],
            "quality_impact": "indeterminate",
            "root_cause": "warehouse picklist showed a superseded material code",
            "product_line": "sterile-injectables",
            "extra": {"classification": "minor"},
        },
    },
    {
        "id": "inc-014",
        "raw_text": (
            "On 2022-11-28, an alarm halted the filling line for batch N5710 at the "
            "West Point site. A piece of broken glass was found on the turntable and "
            "several broken vials were recovered from the infeed. Units filled since "
            "the last clearance were rejected and product quality was impacted for "
            "that segment.\n"
            "The investigation determined that glass to glass contact at the turntable "
            "infeed broke several vials. Infeed guide spacing was corrected and the "
            "glass breakage response procedure was reinforced."
        ),
        "description": (
            "an alarm halted the filling line when a piece of broken glass was found "
            "and glass to glass contact at the infeed broke several vials"
        ),
        "metadata": {
            "occurrence_date": "2022-11-28",
            "site": "west point",
            "batches": ["N5710"],
            "quality_impact": "impacted",
            "root_cause": "glass to glass contact at the turntable infeed broke several vials",
            "product_line": "sterile-injectables",
            "extra": {"classification": "major"},
        },
    },
    {
        "id": "inc-015",
        "raw_text": (
            "On January 9, 2023, a pressure differential loss between the aseptic core "
            "and the adjacent airlock was recorded at the Durham site during "
            "processing of batch O6815. Both airlock doors were found open for "
            "approximately two minutes. Environmental monitoring results were within "
            "limits, but a definitive quality impact conclusion could not be "
            "established and the assessment remained open.\n"
            "The root cause was that a door interlock failed leaving both airlock "
            "doors open. The interlock relay was replaced."
        ),
        "description": (
            "a pressure differential loss occurred between the aseptic core and the "
            "airlock when a door interlock failed leaving both doors open"
        ),
        "metadata": {
            "occurrence_date": "2023-01-09",
            "site": "durham",
            "batches": ["O6815"],
            "quality_impact": "indeterminate",
            "root_cause": "a door interlock failed leaving both airlock doors open",
            "product_line": "sterile-injectables",
            "extra": {"classification": "major"},
        },
    },
    {
        "id": "inc-016",
        "raw_text": (
            "An autoclave cycle deviation was recorded at the Rahway site on "
            "2023-02-21 for load P7920 of component preparation. The come up time "
            "exceeded the validated window by four minutes. The lethality achieved "
            "exceeded the minimum requirement and sterility assurance was maintained; "
            "there was no impact to product quality.\n"
            "The root cause was that a steam trap blockage extended the come up time "
            "beyond the validated window. The steam trap was replaced and added to the "
            "preventive maintenance plan."
        ),
        "description": (
            "an autoclave cycle deviation extended the come up time beyond the "
            "validated window due to a steam trap blockage"
        ),
        "metadata": {
            "occurrence_date": "2023-02-21",
            "site": "rahway",
            "batches": ["P7920"],
            "quality_impact": "not_impacted",
            "root_cause": (
                "steam trap blockage extended the come up time beyond the validated window"
            ),
            "product_line": "biologics",
            "extra": {"classification": "minor"},
        },
    },
    {
        "id": "inc-017",
        "raw_text": (
            "On 5 April 2023, a vibration alarm stopped the centrifuge during "
            "processing of batch Q8030 at the West Point site. The bowl was inspected "
            "with no damage found and processing resumed after rebalancing. There was "
            "no impact to product quality.\n"
            "The root cause was rotor imbalance from uneven bottle loading. Loading "
            "diagrams were posted at the workstation and operators were retrained."
        ),
        "description": (
            "a vibration alarm stopped the centrifuge due to rotor imbalance from "
            "uneven bottle loading"
        ),
        "metadata": {
            "occurrence_date": "2023-04-05",
            "site": "west point",
            "batches": ["Q8030"],
            "quality_impact": "not_impacted",
            "root_cause": "rotor imbalance from uneven bottle loading",
            "product_line": "biologics",
            "extra": {"classification": "minor"},
        },
    },
    {
        "id": "inc-018",
        "raw_text": (
            "During granulation of batch R9140 at the Cork site on May 17, 2023, the "
            "binder solution was added before the dry mix step, reversing the charging "
            "order. The same error was later confirmed for batch R9141 staged on the "
            "same shift. Dissolution results failed specification and product quality "
            "was impacted; both batches were rejected.\n"
            "The investigation concluded that the charging order was reversed against "
            "the batch record instructions. The electronic batch record was updated to "
            "enforce step interlocks."
        ),
        "description": (
            "the charging order was reversed against the batch record instructions "
            "during granulation and dissolution results failed"
        ),
        "metadata": {
            "occurrence_date": "2023-05-17",
            "site": "cork",
            "batches": ["R9140", "R9141"],
            "quality_impact": "impacted",
            "root_cause": "charging order was reversed against the batch record instructions",
            "product_line": "oral-solids",
            "extra": {"classification": "critical"},
        },
    },
    {
        "id": "inc-019",
        "raw_text": (
            "A cleaning verification swab failure was recorded at the Durham site on "
            "2023-07-02 following a campaign changeover ahead of batch S1250. One swab "
            "location on the mixing vessel exceeded the carryover limit. The "
            "subsequent batch had not yet been manufactured; whether prior rinse steps "
            "were adequate for earlier batches could not be fully established, and the "
            "quality impact assessment remained indeterminate.\n"
            "The root cause was that the rinse water dwell time was too short for the "
            "soil type. The cleaning procedure dwell time was extended and revalidated."
        ),
        "description": (
            "a cleaning verification swab exceeded the carryover limit because the "
            "rinse water dwell time was too short for the soil type"
        ),
        "metadata": {
            "occurrence_date": "2023-07-02",
            "site": "durham",
            "batches": ["S1250"],
            "quality_impact": "indeterminate",
            "root_cause": "rinse water dwell time was too short for the soil type",
            "product_line": "biologics",
            "extra": {"classification": "minor"},
        },
    },
    {
        "id": "inc-020",
        "raw_text": (
            "On August 14, 2023, operators found broken glass on the line at the "
            "accumulator table during filling of batch T2360 at the Cork site. The "
            "machine was stopped and cleared, and units on the line at the time were "
            "rejected as a precaution. Inspection showed glass to glass contact of "
            "vials near the accumulator. There was no impact to product quality for "
            "the remainder of the batch.\n"
            "The investigation identified that a chipped guide rail snagged vials "
            "causing glass breakage at the accumulator. The guide rail was replaced "
            "and rail inspections were added to shift checks."
        ),
        "description": (
            "operators found broken glass on the line at the accumulator after glass "
            "to glass contact of vials snagged by a chipped guide rail"
        ),
        "metadata": {
            "occurrence_date": "2023-08-14",
            "site": "cork",
            "batches": ["T2360"],
            "quality_impact": "not_impacted",
            "root_cause": (
                "a chipped guide rail snagged vials causing glass breakage at the accumulator"
            ),
            "product_line": "sterile-injectables",
            "extra": {"classification": "major"},
        },
    },
]

# --- scripted answers, hand-scored -------------------------------------------
# Each entry: task -> record id -> (scripted answer, expected score).
# Expected scores were assigned by hand against the rubric rules; the
# report counts below are derived from this table, never from running the
# grader.

ANSWERS: dict[str, dict[str, tuple[str, str]]] = {
    "occurrence_date": {
        "inc-001": ("the deviation occurred on 12 March 2021", "accurate"),
        "inc-002": ("2021-05-02", "accurate"),
        "inc-003": ("June 18, 2021", "accurate"),
        "inc-004": ("9 August 2021", "accurate"),
        "inc-005": ("2021-09-27", "accurate"),
        "inc-006": ("November 15, 2021", "accurate"),
        "inc-007": ("20 January 2022", "accurate"),
        "inc-008": ("2022-02-14", "accurate"),
        "inc-009": ("March 1, 2022", "accurate"),
        "inc-010": ("23 May 2022", "accurate"),
        "inc-011": ("2022-07-07", "accurate"),
        "inc-012": ("August 30, 2022", "accurate"),
        "inc-013": ("11 October 2022", "accurate"),
        "inc-014": ("the event was recorded on 2022-11-28 during the night shift", "accurate"),
        "inc-015": ("January 9, 2023", "accurate"),
        "inc-016": ("2023-02-21", "accurate"),
        "inc-017": ("5 April 2023", "accurate"),
        "inc-018": ("May 17, 2023", "accurate"),
        "inc-019": ("2023-07-02", "accurate"),
        "inc-020": ("August 14, 2023", "accurate"),
    },
    "site": {
        "inc-001": ("rahway", "accurate"),
        "inc-002": ("the west point site", "acceptable"),
        "inc-003": ("cork", "accurate"),
        "inc-004": ("rahway", "accurate"),
        "inc-005": ("rahway", "inaccurate"),
        "inc-006": ("west point", "accurate"),
        "inc-007": ("cork", "accurate"),
        "inc-008": ("durham", "accurate"),
        "inc-009": ("rahway", "accurate"),
        "inc-010": ("west point", "accurate"),
        "inc-011": ("durham", "accurate"),
        "inc-012": ("cork", "accurate"),
        "inc-013": ("rahway", "accurate"),
        "inc-014": ("west point", "accurate"),
        "inc-015": ("durham", "accurate"),
        "inc-016": ("rahway", "accurate"),
        "inc-017": ("west point pennsylvania campus", "acceptable"),
        "inc-018": ("cork", "accurate"),
        "inc-019": ("durham", "accurate"),
        "inc-020": ("cork", "accurate"),
    },
    "batches": {
        "inc-001": ("batches A1234 and A1234", "accurate"),
        "inc-002": ("batch B2201", "acceptable"),
        "inc-003": ("C3101", "accurate"),
        "inc-004": ("D4150", "accurate"),
        "inc-005": ("E5012", "accurate"),
        "inc-006": ("F6220", "accurate"),
        "inc-007": ("G7301", "accurate"),
        "inc-008": ("H8110", "acceptable"),
        "inc-009": ("I9205", "accurate"),
        "inc-010": ("J1320", "accurate"),
        "inc-011": ("K2410", "accurate"),
        "inc-012": ("L3501", "accurate"),
        "inc-013": ("the affected stopper lot was not assigned a batch code in the report", "inaccurate"),
        "inc-014": ("N5710", "accurate"),
        "inc-015": ("O6815", "accurate"),
        "inc-016": ("P7920", "accurate"),
        "inc-017": ("Q8030", "accurate"),
        "inc-018": ("batch R9141 was implicated", "acceptable"),
        "inc-019": ("S1250", "accurate"),
        "inc-020": ("T2360", "accurate"),
    },
    "quality_impact": {
        "inc-001": ("there was no impact to product quality", "accurate"),
        "inc-002": ("quality was not affected", "acceptable"),
        "inc-003": ("product quality was impacted", "accurate"),
        "inc-004": ("no impact to quality", "accurate"),
        "inc-005": ("the assessment remained open at batch closure", "accurate"),
        "inc-006": ("no impact to product quality resulted", "accurate"),
        "inc-007": ("there was no impact to product quality", "accurate"),
        "inc-008": ("the interruption affected product quality", "acceptable"),
        "inc-009": ("quality was impacted for the implicated segment", "accurate"),
        "inc-010": ("no quality impact", "accurate"),
        "inc-011": ("no impact to the batch was identified", "inaccurate"),
        "inc-012": ("the product was not affected", "accurate"),
        "inc-013": ("no adverse impact was concluded", "acceptable"),
        "inc-014": ("the affected segment was impacted", "accurate"),
        "inc-015": ("the batches were affected pending final assessment", "acceptable"),
        "inc-016": ("sterility was maintained and there was no impact to quality", "accurate"),
        "inc-017": ("no impact to product quality", "accurate"),
        "inc-018": ("dissolution failed and the batches were impacted", "accurate"),
        "inc-019": ("the conclusion could not be fully established for earlier batches", "accurate"),
        "inc-020": ("there was no impact to product quality for the remainder", "accurate"),
    },
    "root_cause": {
        # accurate entries repeat the recorded root cause verbatim (F1 = 1.0);
        # acceptable entries were crafted to land in [0.4, 0.8) by hand token
        # counting; inaccurate entries fall below 0.4.
        "inc-001": ("stopper debris shed by a worn feeder bowl introduced visible particles during filling", "accurate"),
        "inc-002": ("door gasket failure", "acceptable"),  # F1 = 6/12 = 0.50
        "inc-003": ("operator loaded two label reels without a line clearance check", "accurate"),
        "inc-004": ("excess microbubbles from a misadjusted fill nozzle triggered false particle rejects", "accurate"),
        "inc-005": ("the filter housing o-ring was damaged", "acceptable"),  # F1 = 8/13
        "inc-006": ("camera sensitivity drift caused false rejection of acceptable units", "accurate"),
        "inc-007": ("a fragment of a worn sieve screen entered the granulation", "accurate"),
        "inc-008": ("power interruption caused by a utility fault during the storm", "acceptable"),  # F1 = 16/21
        "inc-009": ("capping head misalignment chipped the vial neck", "accurate"),
        "inc-010": ("a fiber from a cleaning wipe remained in the stopper hopper", "accurate"),
        "inc-011": ("the ph meter calibration was expired", "acceptable"),  # F1 = 10/16
        "inc-012": ("hvac dehumidifier coil froze after a refrigerant leak", "accurate"),
        "inc-013": ("operator scanning error at the warehouse", "inaccurate"),  # F1 = 2/13
        "inc-014": ("glass to glass contact at the turntable infeed broke several vials", "accurate"),
        "inc-015": ("a failed door interlock", "acceptable"),  # F1 = 8/13
        "inc-016": ("a blocked steam trap extended the cycle time", "acceptable"),  # F1 = 10/20
        "inc-017": ("rotor imbalance from uneven bottle loading", "accurate"),
        "inc-018": ("charging order was reversed against the batch record instructions", "accurate"),
        "inc-019": ("insufficient operator training on cleaning procedure", "inaccurate"),  # F1 = 0
        "inc-020": ("a chipped guide rail snagged vials causing glass breakage at the accumulator", "accurate"),
    },
}

# --- retrieval-augmented question cases ---------------------------------------

RAG_CASES: list[dict] = []

for rec in RECORDS:
    RAG_CASES.append(
        {
            "question": f"how should we approach an incident like this: {rec['description']}?",
            "top_k": 3,
            "phrases": [],
            "filters": {},
            "min_similarity": None,
            "budget_chars": 4000,
            "expect_fallback": False,
        }
    )

RAG_CASES += [
    {"question": "what usually causes broken glass on a filling line?",
     "top_k": 2, "phrases": ["glass"], "filters": {}, "min_similarity": None,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "how were particle reject exceedances resolved before?",
     "top_k": 3, "phrases": ["particle"], "filters": {}, "min_similarity": None,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "what happened the last time a broken vial was found?",
     "top_k": 2, "phrases": ["broken vial"], "filters": {}, "min_similarity": None,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "how long did cold room recovery take after the temperature excursion?",
     "top_k": 1, "phrases": ["temperature"], "filters": {}, "min_similarity": None,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "what corrective actions followed label mix ups?",
     "top_k": 2, "phrases": ["label"], "filters": {}, "min_similarity": None,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "what is the response plan for a power interruption?",
     "top_k": 1, "phrases": ["power"], "filters": {}, "min_similarity": None,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "which injectable line incidents involved inspection machines?",
     "top_k": 3, "phrases": [], "filters": {"product_line": "sterile-injectables"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": False},
    {"question": "what deviations have we seen in biologics processing?",
     "top_k": 3, "phrases": [], "filters": {"product_line": "biologics"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": False},
    {"question": "what packaging problems occurred on oral solid lines?",
     "top_k": 2, "phrases": [], "filters": {"product_line": "oral-solids"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": False},
    {"question": "summarize recent deviations at rahway",
     "top_k": 3, "phrases": [], "filters": {"site": "rahway"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": False},
    {"question": "summarize recent deviations at cork",
     "top_k": 3, "phrases": [], "filters": {"site": "cork"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": False},
    {"question": "which past incidents actually impacted product quality?",
     "top_k": 3, "phrases": [], "filters": {"quality_impact": "impacted"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": False},
    {"question": "any prior incidents on the lyophilizer line?",
     "top_k": 3, "phrases": [], "filters": {"product_line": "nonexistent"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": True},
    {"question": "have we ever seen unobtainium contamination?",
     "top_k": 3, "phrases": ["unobtainium"], "filters": {}, "min_similarity": None,
     "budget_chars": 4000, "expect_fallback": True},
    {"question": "what deviations occurred at the mars site?",
     "top_k": 3, "phrases": [], "filters": {"site": "mars"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": True},
    {"question": "is there any record remotely about zebra migrations?",
     "top_k": 3, "phrases": [], "filters": {}, "min_similarity": 0.999,
     "budget_chars": 4000, "expect_fallback": True},
    {"question": "what does glass to glass contact do to vials on the infeed?",
     "top_k": 3, "phrases": [], "filters": {}, "min_similarity": None,
     "budget_chars": 700, "expect_fallback": False},
    {"question": "how do false rejects from microbubbles get confirmed?",
     "top_k": 3, "phrases": [], "filters": {}, "min_similarity": None,
     "budget_chars": 700, "expect_fallback": False},
    {"question": "what checks follow a visible particle finding at inspection?",
     "top_k": 3, "phrases": [], "filters": {}, "min_similarity": None,
     "budget_chars": 150, "expect_fallback": False},
    {"question": "what happens when an autoclave come up time runs long?",
     "top_k": 2, "phrases": [], "filters": {}, "min_similarity": None,
     "budget_chars": 150, "expect_fallback": False},
    {"question": "who investigates interlock failures on airlock doors?",
     "top_k": 3, "phrases": [], "filters": {}, "min_similarity": None,
     "budget_chars": 600, "expect_fallback": False},
    {"question": "how similar are past particle defect findings to a new visible particle case?",
     "top_k": 5, "phrases": [], "filters": {}, "min_similarity": 0.2,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "find strongly related glass breakage history",
     "top_k": 5, "phrases": [], "filters": {}, "min_similarity": 0.2,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "closely related particle reject exceedance cases only",
     "top_k": 5, "phrases": [], "filters": {}, "min_similarity": 0.3,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "which records nearly duplicate the cleaning swab failure?",
     "top_k": 4, "phrases": [], "filters": {}, "min_similarity": 0.25,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "related stopper handling deviations above a relatedness floor",
     "top_k": 4, "phrases": [], "filters": {}, "min_similarity": 0.2,
     "budget_chars": 4000, "expect_fallback": False},
    {"question": "glass incidents on injectable lines only",
     "top_k": 2, "phrases": ["glass"], "filters": {"product_line": "sterile-injectables"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": False},
    {"question": "particle findings at west point",
     "top_k": 2, "phrases": ["particle"], "filters": {"site": "west point"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": False},
    {"question": "what happened to batch H8110?",
     "top_k": 1, "phrases": [], "filters": {"batches": "H8110"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": False},
    {"question": "which critical classified deviations should we review first?",
     "top_k": 3, "phrases": [], "filters": {"extra.classification": "critical"},
     "min_similarity": None, "budget_chars": 4000, "expect_fallback": False},
]

assert len(RAG_CASES) == 50, len(RAG_CASES)

ZERO_SHOT_QUESTIONS = [
    "what is a deviation in pharmaceutical manufacturing?",
    "what does cmo stand for in a manufacturing context?",
    "when is a formal investigation required for an incident?",
]

DRAFT_RECORDS = ["inc-001", "inc-007"]

HASH_PROVIDER = ProviderConfig(kind="hash_embed", dimension=64, seed=42)


def write_corpus() -> None:
    with (FIXTURES / "corpus.jsonl").open("w", encoding="utf-8") as handle:
        for rec in RECORDS:
            handle.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def extraction_entries(corpus, templates) -> dict[str, str]:
    entries: dict[str, str] = {}
    for record in corpus:
        for task in TASK_ORDER:
            answer, _ = ANSWERS[task.value][record.id]
            bundle = build_prompt(record, task, templates)
            entries[bundle_digest(bundle)] = answer
    return entries


def rag_entries(corpus, index, templates) -> tuple[dict[str, str], list[dict]]:
    entries: dict[str, str] = {}
    annotated: list[dict] = []
    for i, case in enumerate(RAG_CASES):
        query = RetrievalQuery(
            text=case["question"],
            top_k=case["top_k"],
            phrase_filters=tuple(case["phrases"]),
            metadata_filters=tuple(case["filters"].items()),
            min_similarity=case["min_similarity"],
        )
        hits = search(index, corpus, query, HASH_PROVIDER)
        if hits:
            context, included = _pack_context(
                hits, corpus, ContextBudget(max_chars=case["budget_chars"])
            )
            bundle = PromptBundle(
                intro=templates.rag_intro, context=context, question=case["question"]
            )
            cited = ", ".join(h.record_id for h in included)
            response = f"based on retrieved records {cited}: synthesized guidance for case {i:02d}"
        else:
            bundle = PromptBundle(intro="", context="", question=case["question"])
            response = f"zero-shot synthetic answer for case {i:02d}"
        entries[bundle_digest(bundle)] = response
        annotated.append(dict(case))
        if case["expect_fallback"] != (not hits):
            raise SystemExit(
                f"case {i} expect_fallback={case['expect_fallback']} but hits={len(hits)}"
            )
    return entries, annotated


def offline_entries(corpus) -> dict[str, str]:
    entries: dict[str, str] = {}
    for question in ZERO_SHOT_QUESTIONS:
        bundle = PromptBundle(intro="", context="", question=question)
        entries[bundle_digest(bundle)] = f"zero-shot scripted definition answer: {question}"
    for record_id in DRAFT_RECORDS:
        record = next(r for r in corpus if r.id == record_id)
        bundle = PromptBundle(
            intro=DRAFT_INTRO, context=record.normalized_text, question=DRAFT_QUESTION
        )
        entries[bundle_digest(bundle)] = (
            f"drafted paragraph describing incident {record_id} for indexing"
        )
    return entries


def write_expected_tables() -> None:
    with (FIXTURES / "expected_scored.tsv").open("w", encoding="utf-8") as handle:
        handle.write("# record_id\ttask\texpected_score (hand-assigned)\n")
        for rec in RECORDS:
            for task in TASK_ORDER:
                _, expected = ANSWERS[task.value][rec["id"]]
                handle.write(f"{rec['id']}\t{task.value}\t{expected}\n")

    lines = ["provider,task,accurate,acceptable,inaccurate"]
    for task in TASK_ORDER:
        tally = Counter(expected for _, expected in ANSWERS[task.value].values())
        lines.append(
            f"replay,{task.value},{tally['accurate']},{tally['acceptable']},{tally['inaccurate']}"
        )
    (FIXTURES / "expected_extraction_report.csv").write_text(
        "\n".join(lines) + "\n", encoding="utf-8"
    )


def main() -> None:
    write_corpus()
    corpus = ingest_corpus(FIXTURES / "corpus.jsonl")
    assert len(corpus) == 20

    templates = TemplateSet.load(FIXTURES / "templates")
    index = build_index(corpus, HASH_PROVIDER)

    entries = extraction_entries(corpus, templates)
    rag, annotated = rag_entries(corpus, index, templates)
    entries.update(rag)
    entries.update(offline_entries(corpus))
    TranscriptStore.write(FIXTURES / "transcripts" / "replay.jsonl", entries)

    with (FIXTURES / "rag_cases.yaml").open("w", encoding="utf-8") as handle:
        yaml.safe_dump(annotated, handle, sort_keys=False, allow_unicode=True)

    write_expected_tables()
    print(f"wrote {len(entries)} transcript entries, {len(RAG_CASES)} rag cases")


if __name__ == "__main__":
    main()
