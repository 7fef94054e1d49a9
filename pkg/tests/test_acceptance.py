"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed as each test finishes (visible with ``-s``) and again in
the terminal summary of every run.
"""

import io
import time
from contextlib import contextmanager

from add4riot.catalog import applicable_tactics
from add4riot.cli import cli_main
from add4riot.decisions import decision_status
from add4riot.diagnostics import ModelError
from add4riot.export import from_canonical_json, model_report, pretty_print, to_canonical_json, to_dot
from add4riot.parser import load_model, parse_model
from add4riot.simulator import SimConfig, parse_scenario, render_trace, run
from add4riot.validator import ALL_CODES, phase_status, validate

from .conftest import DATA, FIXTURES, GOLDEN, pipeline_diagnostics
from .gen import generate, scenario_text
from .sim_oracle import flatten, oracle_run
from .test_simulator import _with_protection

RESULTS: list[str] = []
NURSING = DATA / "nursing_home.riot"
GENERATED_SEEDS = range(40)


@contextmanager
def criterion(number: int, title: str):
    notes: list[str] = []
    try:
        yield notes
    except BaseException:
        line = f"FAIL  AC{number} {title}" + (f" ({'; '.join(notes)})" if notes else "")
        RESULTS.append(line)
        print(line)
        raise
    line = f"PASS  AC{number} {title}" + (f" ({'; '.join(notes)})" if notes else "")
    RESULTS.append(line)
    print(line)


def cli(*argv):
    out = io.StringIO()
    return cli_main(list(argv), out, io.StringIO()), out.getvalue()


def test_ac1_case_reproduction(catalog):
    with criterion(1, "nursing home case reproduction") as notes:
        start = time.perf_counter()
        text = NURSING.read_text(encoding="utf-8")
        parsed = parse_model(text)
        assert parsed.ok
        model = load_model(text)
        counts = (
            len(model.threats), len(model.countermeasures), len(model.critical_objects),
            len(model.decisions), int(model.knowledge_base is not None),
        )
        assert counts == (2, 7, 6, 2, 1), counts
        assert not any(d.is_error for d in validate(model, catalog))
        hw = decision_status(model, "MalfunctionFaultyHardware")
        sw = decision_status(model, "SoftwareAttack")
        assert hw.decided and sw.decided
        assert set(hw.selected) == {"GroupDetection", "GatewayMonitoring"}
        assert set(hw.rejected) == {"ElementReplication", "SelfElection"}
        assert set(sw.selected) == {"AntivirusSuite", "AppLayerFirewall"}
        assert set(sw.rejected) == {"IntrusionPrevention"}
        elapsed = time.perf_counter() - start
        code, _ = cli("check", str(NURSING))
        assert code == 0
        notes.append(f"counts {counts}, check exit {code}, {elapsed * 1000:.0f} ms")
        assert elapsed < 1.0


def test_ac2_rule_corpus(catalog):
    with criterion(2, "each rule fixture triggers exactly its code") as notes:
        start = time.perf_counter()
        seen = set()
        for path in sorted((FIXTURES / "rules").glob("*.riot")):
            diags = pipeline_diagnostics(path.read_text(encoding="utf-8"), catalog)
            codes = [d.code for d in diags]
            assert path.stem in codes, (path.stem, codes)
            others = [d.code for d in diags if d.is_error and d.code != path.stem]
            assert not others, (path.stem, others)
            assert codes == [path.stem], (path.stem, codes)
            seen.add(path.stem)
        elapsed = time.perf_counter() - start
        assert seen == set(ALL_CODES)
        notes.append(f"{len(seen)} codes, {elapsed:.2f} s")
        assert elapsed < 5.0


def test_ac3_phase_gates(catalog):
    with criterion(3, "incremental fixtures complete P1..P4 in turn"):
        expected = {
            "p1_domain": {"P1"},
            "p2_threats": {"P1", "P2"},
            "p3_candidates": {"P1", "P2", "P3"},
            "p4_decisions": {"P1", "P2", "P3", "P4"},
        }
        for name, phases in expected.items():
            model = load_model((FIXTURES / "phases" / f"{name}.riot").read_text(encoding="utf-8"))
            assert phase_status(model, catalog).complete == phases, name


def _generated_pairs():
    for seed in GENERATED_SEEDS:
        text, events, horizon, delay, block = generate(seed, max_objects=4, max_threats=2, max_horizon=10)
        model = load_model(text)
        assert len(model.critical_objects) <= 4 and len(model.threats) <= 2 and horizon <= 10
        yield seed, model, events, horizon, delay, block


def test_ac4_oracle_equivalence():
    with criterion(4, "simulator matches brute-force oracle exactly") as notes:
        n = 0
        for seed, model, events, horizon, delay, block in _generated_pairs():
            scenario = parse_scenario(scenario_text(events, horizon), model)
            result = run(model, scenario, SimConfig(delay, block))
            assert flatten(result) == oracle_run(model, events, horizon, delay, block), seed
            n += 1
        notes.append(f"{n} pairs")
        assert n >= 20


def test_ac5_simulator_properties():
    with criterion(5, "protection/memory monotonicity and determinism") as notes:
        n = 0
        for seed, model, events, horizon, delay, _ in _generated_pairs():
            scenario = parse_scenario(scenario_text(events, horizon), model)
            on = run(model, scenario, SimConfig(delay, True))
            off = run(model, scenario, SimConfig(delay, False))
            assert on.metrics.downtime_ticks <= off.metrics.downtime_ticks, seed
            for threat in model.threats:
                shielded = run(_with_protection(model, threat.id), scenario, SimConfig(delay, True))
                assert shielded.metrics.downtime_ticks <= on.metrics.downtime_ticks, (seed, threat.id)
            again = run(model, scenario, SimConfig(delay, True))
            assert render_trace(on).encode() == render_trace(again).encode(), seed
            assert repr(on).encode() == repr(again).encode(), seed
            n += 1
        notes.append(f"{n} pairs")


def test_ac6_round_trips_and_golden(catalog):
    with criterion(6, "DSL/JSON round-trips and golden outputs") as notes:
        paths = [NURSING, FIXTURES / "clean.riot"]
        paths += sorted((FIXTURES / "rules").glob("*.riot")) + sorted((FIXTURES / "phases").glob("*.riot"))
        n = 0
        for path in paths:
            try:
                model = load_model(path.read_text(encoding="utf-8"))
            except ModelError:
                continue
            assert load_model(pretty_print(model)) == model, path.name
            text = to_canonical_json(model)
            assert to_canonical_json(from_canonical_json(text)) == text, path.name
            n += 1
        nursing = load_model(NURSING.read_text(encoding="utf-8"))
        assert to_dot(nursing).encode() == (GOLDEN / "nursing_home.dot").read_bytes()
        report = model_report(nursing, catalog, validate(nursing, catalog), "nursing_home.riot")
        assert report.encode() == (GOLDEN / "report.md").read_bytes()
        assert to_canonical_json(nursing).encode() == (GOLDEN / "nursing_home.json").read_bytes()
        notes.append(f"{n} models")


def test_ac7_catalog_suggestion(catalog):
    with criterion(7, "suggest lists the case tactics in catalog order"):
        order = [t.key for t in catalog.tactics]
        expected = {
            "MalfunctionFaultyHardware": [
                "gateway_autonomic_architecture", "group_detection",
                "element_replication", "self_election",
            ],
            "SoftwareAttack": [
                "intrusion_prevention_system", "antivirus_antispyware_antiadware",
                "application_layer_firewall",
            ],
        }
        for threat, keys in expected.items():
            code, out = cli("suggest", str(NURSING), "--threat", threat)
            assert code == 0
            listed = [line.split()[0] for line in out.splitlines()[1:]]
            assert listed == keys, listed
            assert listed == sorted(listed, key=order.index)
        assert [t.key for t in applicable_tactics(catalog, "software_attack")] == expected["SoftwareAttack"]
