"""Semantic rules, phase gates and resilience coverage.

Error codes are meta-model violations; warning codes flag gaps against the
resilience definition or the catalog and never block.

    E003 threat motivation/cause empty
    E004 threat source/layer/type invalid or unknown to the catalog
    E005 element-kind constraint: threat target not critical, critical object
         of a context kind, hosts/attached_to from a non-hardware element
    E006 countermeasure tactic not in the catalog under its property
    E007 decision partition/candidacy violated, or second decision for a threat
    E008 rejection without rationale
    E009 countermeasures selected but no knowledge base
    W101 critical object targeted by no threat
    W102 threat without candidate countermeasures
    W103 countermeasure tactic not applicable to the threat type
    W104 (object kind, threat source) missing from the domain risk table
    W105 decided threat without a selected detection countermeasure
    W106 decisions exist but no monitoring countermeasure is selected
    W107 decision records fewer than two stakeholder roles
    W108 human-source threat without layer
    W109 monitoring selected but no device has role="gateway"
"""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import Catalog, domain_risk_rows
from .decisions import decision_findings
from .diagnostics import Diagnostic, sort_diagnostics
from .model import (
    HOSTING_LABELS,
    KNOWN_DOMAINS,
    PROPERTIES,
    THREAT_LAYERS,
    THREAT_SOURCES,
    ElementClass,
    ElementKind,
    ModelGraph,
    ResilienceProperty,
    ThreatSource,
    decided_threats,
    element_class,
)

ALL_CODES = (
    ["P001", "P002", "P003", "P004", "P005"]
    + [f"E00{i}" for i in range(1, 10)]
    + [f"W10{i}" for i in range(1, 10)]
)


def validate(model: ModelGraph, catalog: Catalog) -> list[Diagnostic]:
    out: list[Diagnostic] = []

    def emit(code: str, message: str, span=None, subject: str | None = None) -> None:
        out.append(Diagnostic(code, message, span, subject))

    elements = {e.id: e for e in model.elements}
    critical = model.critical_ids
    selected = model.selected_countermeasures()
    selected_props = {c.property for c in selected}

    for rel in model.relations:
        if rel.label in HOSTING_LABELS:
            src = elements[rel.source]
            if src.element_class is not ElementClass.HARDWARE:
                emit("E005", f"'{rel.label}' source must be a hardware element, "
                     f"'{src.id}' is {src.kind}", rel.span, rel.source)

    for co in model.critical_objects:
        el = elements[co.element]
        if el.element_class is ElementClass.CONTEXT:
            emit("E005", f"critical object must be hardware or software, "
                 f"'{el.id}' is {el.kind}", co.span, co.element)

    targeted: set[str] = set()
    for t in model.threats:
        targeted.update(t.affects)
        for name, text in (("motivation", t.motivation), ("cause", t.cause)):
            if not text.strip():
                emit("E003", f"threat {name} is empty", t.span, t.id)
        if t.source not in THREAT_SOURCES:
            emit("E004", f"unknown threat source '{t.source}'", t.span, t.id)
        if t.layer is not None and t.layer not in THREAT_LAYERS:
            emit("E004", f"unknown threat layer '{t.layer}'", t.span, t.id)
        entry = catalog.threat_type(t.threat_type)
        if entry is None:
            emit("E004", f"threat type '{t.threat_type}' is not in the catalog", t.span, t.id)
        elif t.source in THREAT_SOURCES and entry.source != t.source:
            emit("E004", f"threat type '{t.threat_type}' has source '{entry.source}', "
                 f"not '{t.source}'", t.span, t.id)
        if t.source == ThreatSource.HUMAN and t.layer is None:
            emit("W108", "human-source threat has no layer", t.span, t.id)
        for target in t.affects:
            if target not in critical:
                emit("E005", f"threat affects '{target}', which is not a critical object",
                     t.span, t.id)
        if not model.candidates(t.id):
            emit("W102", "no candidate countermeasure mitigates this threat", t.span, t.id)
        _check_domain_risk(model, catalog, t, emit)

    for co in model.critical_objects:
        if co.element not in targeted:
            emit("W101", "critical object is targeted by no threat", co.span, co.element)

    for cm in model.countermeasures:
        tactic = catalog.tactic(cm.tactic)
        if cm.property not in PROPERTIES:
            emit("E006", f"unknown resilience property '{cm.property}'", cm.span, cm.id)
        elif tactic is None or tactic.property != cm.property:
            where = f" (catalog lists it under {tactic.property})" if tactic else ""
            emit("E006", f"tactic '{cm.tactic}' is not a {cm.property} tactic in the "
                 f"catalog{where}", cm.span, cm.id)
        if tactic is None:
            continue
        for threat_id in cm.mitigates:
            ttype = model.threat(threat_id).threat_type
            if catalog.threat_type(ttype) is not None and not catalog.is_applicable(
                cm.tactic, ttype
            ):
                emit("W103", f"tactic '{cm.tactic}' is not applicable to threat type "
                     f"'{ttype}' of '{threat_id}'", cm.span, cm.id)

    owners = decided_threats(model)
    for d in model.decisions:
        out.extend(decision_findings(model, d))
        if owners.get(d.resolves) == d.id:
            props = {model.countermeasure(c).property for c in d.selected}
            if ResilienceProperty.DETECTION.value not in props:
                emit("W105", f"no detection countermeasure selected for '{d.resolves}'",
                     d.span, d.resolves)
        if len(set(d.stakeholders)) < 2:
            emit("W107", f"decision records {len(set(d.stakeholders))} stakeholder role(s); "
                 "expected at least 2", d.span, d.id)

    if selected and model.knowledge_base is None:
        emit("E009", "countermeasures are selected but the model has no knowledge base",
             model.span, model.name)
    if model.decisions and ResilienceProperty.MONITORING.value not in selected_props:
        emit("W106", "no monitoring countermeasure is selected anywhere", model.span,
             model.name)
    if ResilienceProperty.MONITORING.value in selected_props and not any(
        e.kind == ElementKind.DEVICE and e.attribute("role") == "gateway"
        for e in model.elements
    ):
        emit("W109", 'monitoring is selected but no device has role="gateway"; '
             "update the domain model", model.span, model.name)

    return sort_diagnostics(out)


def _check_domain_risk(model: ModelGraph, catalog: Catalog, threat, emit) -> None:
    if model.app_domain not in KNOWN_DOMAINS or threat.source not in THREAT_SOURCES:
        return
    for target in threat.affects:
        if target not in model.critical_ids:
            continue
        el = model.element(target)
        if element_class(el.kind) is ElementClass.CONTEXT:
            continue
        if threat.source not in domain_risk_rows(catalog, model.app_domain, el.kind):
            emit("W104", f"risk table for {model.app_domain} lists no {threat.source} "
                 f"threats for {el.kind} '{target}'", threat.span, threat.id)


# --- phase gates -------------------------------------------------------------


@dataclass(frozen=True)
class PhaseResult:
    phase: str
    complete: bool
    missing: tuple[str, ...] = ()


@dataclass(frozen=True)
class PhaseReport:
    phases: tuple[PhaseResult, ...]

    @property
    def complete(self) -> frozenset[str]:
        return frozenset(p.phase for p in self.phases if p.complete)

    def __getitem__(self, phase: str) -> PhaseResult:
        for p in self.phases:
            if p.phase == phase:
                return p
        raise KeyError(phase)

    def render(self) -> str:
        lines = []
        for p in self.phases:
            lines.append(f"{p.phase} {'complete' if p.complete else 'incomplete'}")
            lines += [f"  - {m}" for m in p.missing]
        lines.append(f"Phases complete: {len(self.complete)}/{len(self.phases)}")
        return "\n".join(lines) + "\n"


def phase_status(model: ModelGraph, catalog: Catalog | None = None) -> PhaseReport:
    """Gate P1-P4. Each gate also requires the previous one."""
    gates: list[list[str]] = []

    gates.append([] if model.elements else ["declare at least one domain element"])

    p2: list[str] = []
    if not model.critical_objects:
        p2.append("classify at least one critical object")
    if not model.threats:
        p2.append("identify at least one threat")
    gates.append(p2)

    gates.append([f"list candidate countermeasures for threat '{t.id}'"
                  for t in model.threats if not model.candidates(t.id)])

    p4: list[str] = []
    owners = decided_threats(model)
    p4 += [f"decide threat '{t}'" for t, d in owners.items() if d is None]
    for d in model.decisions:
        codes = sorted({f.code for f in decision_findings(model, d)})
        if codes:
            p4.append(f"fix decision '{d.id}' ({', '.join(codes)})")
    gates.append(p4)

    results = []
    prior_ok = True
    for i, missing in enumerate(gates, start=1):
        if not prior_ok:
            missing = [f"complete P{i - 1} first"] + missing
        ok = not missing
        results.append(PhaseResult(f"P{i}", ok, tuple(missing)))
        prior_ok = ok
    return PhaseReport(tuple(results))


# --- coverage ------------------------------------------------------------------


@dataclass(frozen=True)
class ThreatCoverage:
    threat: str
    monitoring_available: bool
    detection: bool
    protection: bool
    restoration: bool


@dataclass(frozen=True)
class CoverageReport:
    threats: tuple[ThreatCoverage, ...]
    knowledge_base_present: bool

    def for_threat(self, threat_id: str) -> ThreatCoverage:
        for c in self.threats:
            if c.threat == threat_id:
                return c
        raise KeyError(threat_id)


def coverage_report(model: ModelGraph) -> CoverageReport:
    """Resilience coverage from selected countermeasures only."""
    selected = model.selected_countermeasures()
    monitoring = any(c.property == ResilienceProperty.MONITORING for c in selected)

    def covered(threat_id: str, prop: ResilienceProperty) -> bool:
        return any(c.property == prop and threat_id in c.mitigates for c in selected)

    rows = tuple(
        ThreatCoverage(
            t.id,
            monitoring,
            covered(t.id, ResilienceProperty.DETECTION),
            covered(t.id, ResilienceProperty.PROTECTION),
            covered(t.id, ResilienceProperty.RESTORATION),
        )
        for t in model.threats
    )
    return CoverageReport(rows, model.knowledge_base is not None)
