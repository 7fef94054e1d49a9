import dataclasses
import re

import pytest

from add4riot.decisions import DecisionError, decision_record, decision_status
from add4riot.model import Decision
from add4riot.parser import load_model
from add4riot.validator import validate

from .conftest import FIXTURES, nursing_source, without_decisions

CLEAN = (FIXTURES / "clean.riot").read_text(encoding="utf-8")


def test_status_of_decided_threats(nursing):
    hw = decision_status(nursing, "MalfunctionFaultyHardware")
    assert hw.decided and hw.decision == "AvoidMalfunctions"
    assert set(hw.selected) == {"GroupDetection", "GatewayMonitoring"}
    assert set(hw.rejected) == {"ElementReplication", "SelfElection"}
    sw = decision_status(nursing, "SoftwareAttack")
    assert set(sw.selected) == {"AntivirusSuite", "AppLayerFirewall"}
    assert set(sw.rejected) == {"IntrusionPrevention"}


def test_status_without_decisions_is_open():
    model = load_model(without_decisions(nursing_source()))
    for t in model.threats:
        assert decision_status(model, t.id).state == "open"


def test_non_candidate_selection_leaves_threat_open(nursing):
    bad = dataclasses.replace(
        nursing.decision("AvoidSoftwareAttacks"), selected=("AntivirusSuite", "GroupDetection")
    )
    model = dataclasses.replace(
        nursing,
        decisions=tuple(bad if d.id == bad.id else d for d in nursing.decisions),
    )
    assert decision_status(model, "SoftwareAttack").state == "open"
    assert decision_status(model, "MalfunctionFaultyHardware").decided


def test_status_unknown_threat(nursing):
    with pytest.raises(KeyError):
        decision_status(nursing, "Nope")


def test_status_agrees_with_validator(nursing, catalog):
    # A threat is decided exactly when its decision carries no E007/E008.
    variants = [nursing, load_model(CLEAN)]
    variants.append(load_model(CLEAN.replace("  select: Mon, Det\n", '  select: Mon\n  reject: Det("")\n')))
    variants.append(load_model(CLEAN.replace("  select: Mon, Det\n", '  select: Mon, Det\n  reject: Mon("x")\n')))
    for model in variants:
        bad = {d.subject for d in validate(model, catalog) if d.code in ("E007", "E008")}
        for d in model.decisions:
            assert decision_status(model, d.resolves).decided == (d.id not in bad)


# --- records ---------------------------------------------------------------------------


def test_malfunction_record_mentions_cost(nursing, catalog):
    text = decision_record(nursing, "AvoidMalfunctions", catalog)
    assert text.startswith("# Decision AvoidMalfunctions\n")
    assert "Low cost solution" in text
    rejected = text.split("## Rejected")[1].split("## Stakeholders")[0]
    assert "`ElementReplication`" in rejected and "cost" in rejected
    assert "`SelfElection`" in rejected


def test_software_record_mentions_effort(nursing, catalog):
    text = decision_record(nursing, "AvoidSoftwareAttacks", catalog)
    assert "Low effort to implement" in text
    rejected = text.split("## Rejected")[1]
    assert "`IntrusionPrevention`" in rejected
    assert "qualified staff" in rejected


def test_record_sections_and_options(nursing, catalog):
    text = decision_record(nursing, "AvoidMalfunctions", catalog)
    headings = re.findall(r"^## (.+)$", text, re.M)
    assert headings == ["Context", "Concern", "Options considered", "Decision", "Rejected", "Stakeholders"]
    options = text.split("## Options considered")[1].split("## Decision")[0]
    assert len(re.findall(r"^- `", options, re.M)) == 4


def test_record_without_rejections(catalog):
    text = decision_record(load_model(CLEAN), "D", catalog)
    assert "## Rejected\n\n_None._" in text


def test_record_for_invalid_decision_raises(catalog):
    model = load_model(CLEAN.replace("  select: Mon, Det\n", '  select: Mon, Det\n  reject: Det("x")\n'))
    with pytest.raises(DecisionError) as info:
        decision_record(model, "D", catalog)
    assert info.value.codes == ["E007"]


def test_record_renders_unknown_roles(catalog):
    model = load_model(CLEAN.replace("resilience_expert", "nurse"))
    assert "- other(nurse)" in decision_record(model, "D", catalog)


def _record_partition(text: str) -> tuple[set, set]:
    chosen = text.split("## Decision\n")[1].split("## Rejected")[0]
    rejected = text.split("## Rejected")[1].split("## Stakeholders")[0]
    return set(re.findall(r"^- `(\w+)`", chosen, re.M)), set(re.findall(r"^- `(\w+)`", rejected, re.M))


def test_record_parse_back_matches_partition(nursing, catalog):
    for d in nursing.decisions:
        selected, rejected = _record_partition(decision_record(nursing, d.id, catalog))
        assert selected == set(d.selected)
        assert rejected == set(d.rejected_ids)
        assert not selected & rejected


def test_record_is_deterministic(nursing, catalog):
    assert decision_record(nursing, "AvoidMalfunctions", catalog) == decision_record(
        nursing, "AvoidMalfunctions", catalog
    )


def test_rationale_is_rendered(catalog):
    model = load_model(CLEAN.replace('  concern: "Cost"\n', '  concern: "Cost"\n  rationale: "Cheap and simple"\n'))
    assert isinstance(model.decision("D"), Decision)
    assert "Rationale: Cheap and simple" in decision_record(model, "D", catalog)
