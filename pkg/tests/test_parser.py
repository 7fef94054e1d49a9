import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from add4riot.diagnostics import ParseError, ResolveError
from add4riot.lexer import TokenKind, quote, tokenize
from add4riot.parser import (
    CountermeasureDecl,
    CriticalDecl,
    DecisionDecl,
    ElementDecl,
    KnowledgeBaseDecl,
    RelationDecl,
    ThreatDecl,
    load_model,
    parse_model,
)

from .conftest import FIXTURES

CLEAN = (FIXTURES / "clean.riot").read_text(encoding="utf-8")


def kinds(source):
    return [t.kind for t in tokenize(source)]


# --- lexer -------------------------------------------------------------------


def test_tokenize_relation():
    assert kinds("Board - hosts -> Data") == [
        TokenKind.IDENT, TokenKind.DASH, TokenKind.IDENT, TokenKind.ARROW, TokenKind.IDENT,
    ]


def test_tokenize_strings_and_comments():
    toks = tokenize('concern: "a \\"b\\"\\n" # trailing comment\n')
    assert [t.kind for t in toks] == [TokenKind.KEYWORD, TokenKind.COLON, TokenKind.STRING]
    assert toks[2].value == 'a "b"\n'


def test_unterminated_string_stops_at_newline():
    toks = tokenize('"open\nsensor S')
    assert toks[0].kind is TokenKind.UNTERMINATED
    assert [t.value for t in toks[1:]] == ["sensor", "S"]


def test_quote_round_trips_through_lexer():
    for text in ['plain', 'with "quotes"', "back\\slash", "multi\nline", "ünïcödé"]:
        (tok,) = tokenize(quote(text))
        assert tok.kind is TokenKind.STRING and tok.value == text


def test_unknown_character_is_error_token():
    assert TokenKind.ERROR in kinds("sensor S @")


# --- parser: the reference fixture ------------------------------------------


def test_nursing_declaration_counts(nursing_text):
    result = parse_model(nursing_text)
    assert result.ok, result.diagnostics
    assert len(result.of_type(ThreatDecl)) == 2
    assert len(result.of_type(CountermeasureDecl)) == 7
    assert sum(len(c.elements) for c in result.of_type(CriticalDecl)) == 6
    assert len(result.of_type(DecisionDecl)) == 2
    assert len(result.of_type(KnowledgeBaseDecl)) == 1
    assert len(result.of_type(ElementDecl)) == 16
    assert len(result.of_type(RelationDecl)) == 16


def test_nursing_model_contents(nursing):
    assert nursing.name and nursing.app_domain == "health_wellbeing"
    sw = nursing.threat("SoftwareAttack")
    assert (sw.source, sw.layer, sw.threat_type) == ("human", "application", "software_attack")
    assert set(sw.affects) == {"PcDesktopApp", "AndroidApp"}
    d = nursing.decision("AvoidMalfunctions")
    assert set(d.selected) == {"GroupDetection", "GatewayMonitoring"}
    assert set(d.rejected_ids) == {"ElementReplication", "SelfElection"}


def test_fields_in_any_order():
    src = CLEAN.replace(
        "  source: hardware\n  type: malfunction_faulty_hardware\n",
        "  type: malfunction_faulty_hardware\n  source: hardware\n",
    )
    assert src != CLEAN
    assert load_model(src) == load_model(CLEAN)


# --- parser: diagnostics -------------------------------------------------------


def test_empty_source_is_p001():
    result = parse_model("")
    assert [d.code for d in result.diagnostics] == ["P001"]


def test_missing_field_is_p005_with_span():
    source = (FIXTURES / "rules" / "P005.riot").read_text(encoding="utf-8")
    result = parse_model(source)
    (diag,) = result.diagnostics
    assert diag.code == "P005"
    assert "cause" in diag.message and diag.subject == "Fault"
    assert diag.span.line == source[: source.index("threat Fault")].count("\n") + 1
    # the incomplete threat is dropped, not half-built
    assert not result.of_type(ThreatDecl)


def test_duplicate_field_is_p004():
    src = CLEAN.replace('  motivation: "Sensors misused"\n', '  motivation: "a"\n  motivation: "b"\n')
    assert [d.code for d in parse_model(src).diagnostics] == ["P004"]


def test_unknown_relation_label_is_p003_with_hint():
    result = parse_model(CLEAN.replace("Board - hosts -> Data", "Board - hostz -> Data"))
    (diag,) = result.diagnostics
    assert diag.code == "P003" and "hosts" in diag.message


def test_unterminated_string_is_p002():
    result = parse_model(CLEAN.replace('concern: "Cost"', 'concern: "Cost'))
    assert "P002" in {d.code for d in result.diagnostics}


def test_p001_message_lists_expectation():
    (diag,) = parse_model('application "x" domain other\nsensor S {\n').diagnostics
    assert diag.code == "P001" and "expected" in diag.message


def test_duplicate_id_is_e001_with_both_spans():
    source = (FIXTURES / "rules" / "E001.riot").read_text(encoding="utf-8")
    with pytest.raises(ResolveError) as info:
        load_model(source)
    (diag,) = info.value.diagnostics
    assert diag.code == "E001" and diag.subject == "Temp"
    assert len(diag.related) == 1
    first, second = diag.related[0], diag.span
    assert first.line < second.line
    assert first.text(source) == second.text(source) == "Temp"


def test_unresolved_reference_is_e002_with_hint():
    src = CLEAN.replace("affects: Board, Temp", "affects: Board, Sensor9")
    with pytest.raises(ResolveError) as info:
        load_model(src)
    (diag,) = info.value.diagnostics
    assert diag.code == "E002" and "Sensor9" in diag.message
    assert diag.span.text(src) == "Sensor9"


def test_wrong_kind_reference_is_e002():
    src = CLEAN.replace("mitigates: Fault }\ncountermeasure Det", "mitigates: Board }\ncountermeasure Det")
    with pytest.raises(ResolveError) as info:
        load_model(src)
    assert info.value.codes == ["E002"]


def test_load_model_raises_parse_error_first():
    with pytest.raises(ParseError):
        load_model("application")


# --- recovery ---------------------------------------------------------------------

BROKEN_LINES = [
    "sensor {",
    "threat T { source: }",
    "X - explodes -> Y",
    'critical "oops"',
    "decision D { resolves: }",
]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(BROKEN_LINES), min_size=1, max_size=5))
def test_recovery_reports_every_broken_declaration(broken):
    # Interleave broken lines with valid ones; each one must produce its own finding.
    lines = ['application "r" domain other']
    for i, b in enumerate(broken):
        lines += [f"sensor Ok{i}", b]
    lines.append("sensor Tail")
    result = parse_model("\n".join(lines) + "\n")
    assert len(result.diagnostics) >= len(broken)
    ids = {d.id for d in result.of_type(ElementDecl)}
    assert "Tail" in ids


# --- spans --------------------------------------------------------------------------


def test_entity_spans_point_at_their_ids(nursing, nursing_text):
    entities = (
        list(nursing.elements) + list(nursing.threats) + list(nursing.countermeasures)
        + list(nursing.decisions) + [nursing.knowledge_base]
    )
    for e in entities:
        assert e.span.text(nursing_text) == e.id


def test_critical_spans_point_at_elements(nursing, nursing_text):
    for c in nursing.critical_objects:
        assert c.span.text(nursing_text) == c.element


def test_spans_count_utf8_bytes_and_character_columns():
    src = 'application "ünï" domain other\nsensor S { label = "é" }\n'
    (s,) = parse_model(src).of_type(ElementDecl)
    span = s.spans["id"]
    assert span.text(src) == "S"
    assert (span.line, span.column) == (2, 8)
    assert span.start == len('application "ünï" domain other\nsensor '.encode("utf-8"))
