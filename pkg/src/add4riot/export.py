"""Serializations of a ModelGraph: canonical JSON, DSL, DOT and markdown report."""

from __future__ import annotations

import json
from typing import Any, Iterable

from .catalog import Catalog, default_catalog
from .decisions import decision_record, decision_status, is_valid_decision
from .diagnostics import Diagnostic
from .lexer import quote
from .model import (
    CriticalObject,
    Decision,
    DomainElement,
    IoTThreat,
    KnowledgeBase,
    ModelGraph,
    Rejection,
    Relation,
    ResilientCountermeasure,
)
from .validator import coverage_report, phase_status

# --- canonical JSON ----------------------------------------------------------


def to_dict(model: ModelGraph) -> dict[str, Any]:
    kb = model.knowledge_base
    return {
        "name": model.name,
        "app_domain": model.app_domain,
        "elements": [
            {
                "id": e.id,
                "kind": e.kind,
                "label": e.label,
                "attributes": dict(e.attributes),
            }
            for e in model.elements
        ],
        "relations": [
            {"from": r.source, "label": r.label, "to": r.target} for r in model.relations
        ],
        "critical_objects": [
            {"element": c.element, "justification": c.justification}
            for c in model.critical_objects
        ],
        "threats": [
            {
                "id": t.id,
                "source": t.source,
                "layer": t.layer,
                "threat_type": t.threat_type,
                "motivation": t.motivation,
                "cause": t.cause,
                "affects": list(t.affects),
            }
            for t in model.threats
        ],
        "countermeasures": [
            {
                "id": c.id,
                "property": c.property,
                "tactic": c.tactic,
                "mitigates": list(c.mitigates),
                "description": c.description,
            }
            for c in model.countermeasures
        ],
        "knowledge_base": None if kb is None else {"id": kb.id, "description": kb.description},
        "decisions": [
            {
                "id": d.id,
                "resolves": d.resolves,
                "concern": d.concern,
                "selected": list(d.selected),
                "rejected": [
                    {"countermeasure": r.countermeasure, "rationale": r.rationale}
                    for r in d.rejected
                ],
                "rationale": d.rationale,
                "stakeholders": list(d.stakeholders),
            }
            for d in model.decisions
        ],
    }


def canonical_dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def to_canonical_json(model: ModelGraph) -> str:
    return canonical_dumps(to_dict(model))


def from_dict(data: dict[str, Any]) -> ModelGraph:
    kb = data.get("knowledge_base")
    # Attribute order is not preserved by JSON (keys are sorted).
    return ModelGraph(
        name=data["name"],
        app_domain=data["app_domain"],
        elements=tuple(
            DomainElement(
                e["id"], e["kind"], e.get("label"), tuple(e.get("attributes", {}).items())
            )
            for e in data.get("elements", [])
        ),
        relations=tuple(
            Relation(r["from"], r["label"], r["to"]) for r in data.get("relations", [])
        ),
        critical_objects=tuple(
            CriticalObject(c["element"], c.get("justification"))
            for c in data.get("critical_objects", [])
        ),
        threats=tuple(
            IoTThreat(
                t["id"],
                source=t["source"],
                threat_type=t["threat_type"],
                motivation=t["motivation"],
                cause=t["cause"],
                affects=tuple(t["affects"]),
                layer=t.get("layer"),
            )
            for t in data.get("threats", [])
        ),
        countermeasures=tuple(
            ResilientCountermeasure(
                c["id"], c["property"], c["tactic"], tuple(c["mitigates"]), c.get("description")
            )
            for c in data.get("countermeasures", [])
        ),
        knowledge_base=None if kb is None else KnowledgeBase(kb["id"], kb.get("description")),
        decisions=tuple(
            Decision(
                d["id"],
                resolves=d["resolves"],
                concern=d["concern"],
                selected=tuple(d["selected"]),
                rejected=tuple(
                    Rejection(r["countermeasure"], r["rationale"]) for r in d.get("rejected", [])
                ),
                rationale=d.get("rationale"),
                stakeholders=tuple(d.get("stakeholders", [])),
            )
            for d in data.get("decisions", [])
        ),
    )


def from_canonical_json(text: str) -> ModelGraph:
    return from_dict(json.loads(text))


# --- DSL pretty printer --------------------------------------------------------


def pretty_print(model: ModelGraph) -> str:
    out = [f"application {quote(model.name)} domain {model.app_domain}", ""]

    for e in model.elements:
        attrs = ([("label", e.label)] if e.label is not None else []) + list(e.attributes)
        if attrs:
            body = " ".join(f"{k} = {quote(v)}" for k, v in attrs)
            out.append(f"{e.kind} {e.id} {{ {body} }}")
        else:
            out.append(f"{e.kind} {e.id}")
    if model.relations:
        out.append("")
    out += [f"{r.source} - {r.label} -> {r.target}" for r in model.relations]
    if model.critical_objects:
        out.append("")
    for c in model.critical_objects:
        tail = f" justification: {quote(c.justification)}" if c.justification is not None else ""
        out.append(f"critical {c.element}{tail}")

    for t in model.threats:
        out += ["", f"threat {t.id} {{", f"  source: {t.source}"]
        if t.layer is not None:
            out.append(f"  layer: {t.layer}")
        out += [
            f"  type: {t.threat_type}",
            f"  motivation: {quote(t.motivation)}",
            f"  cause: {quote(t.cause)}",
            f"  affects: {', '.join(t.affects)}",
            "}",
        ]
    for c in model.countermeasures:
        out += [
            "",
            f"countermeasure {c.id} {{",
            f"  property: {c.property}",
            f"  tactic: {c.tactic}",
            f"  mitigates: {', '.join(c.mitigates)}",
        ]
        if c.description is not None:
            out.append(f"  description: {quote(c.description)}")
        out.append("}")
    if model.knowledge_base is not None:
        kb = model.knowledge_base
        desc = f" {{ description = {quote(kb.description)} }}" if kb.description is not None else ""
        out += ["", f"knowledge_base {kb.id}{desc}"]
    for d in model.decisions:
        out += [
            "",
            f"decision {d.id} {{",
            f"  resolves: {d.resolves}",
            f"  concern: {quote(d.concern)}",
            f"  select: {', '.join(d.selected)}",
        ]
        if d.rejected:
            rej = ", ".join(f"{r.countermeasure}({quote(r.rationale)})" for r in d.rejected)
            out.append(f"  reject: {rej}")
        if d.rationale is not None:
            out.append(f"  rationale: {quote(d.rationale)}")
        if d.stakeholders:
            out.append(f"  stakeholders: {', '.join(d.stakeholders)}")
        out.append("}")
    return "\n".join(out) + "\n"


# --- DOT -------------------------------------------------------------------------

PALETTE = {
    "critical": "darkorange",
    "threat": "red",
    "countermeasure": "green",
    "decision": "yellow",
    "element": "gray",
    "knowledge_base": "blue",
}


def _dot_id(ident: str) -> str:
    return f'"{ident}"'


def _dot_label(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _node(ident: str, stereotype: str, role: str, shape: str) -> str:
    label = f"{_dot_label(ident)}\\n«{_dot_label(stereotype)}»"
    font = ', fontcolor="white"' if role == "knowledge_base" else ""
    return (
        f'  {_dot_id(ident)} [label="{label}", shape={shape}, '
        f'style=filled, fillcolor="{PALETTE[role]}"{font}];'
    )


def _edge(a: str, b: str, label: str, style: str | None = None) -> str:
    extra = f", style={style}" if style else ""
    return f'  {_dot_id(a)} -> {_dot_id(b)} [label="{label}"{extra}];'


def to_dot(model: ModelGraph) -> str:
    lines = [f'digraph "{_dot_label(model.name)}" {{', "  rankdir=LR;", "  node [fontname=Helvetica];"]
    critical = model.critical_ids
    for e in model.elements:
        role = "critical" if e.id in critical else "element"
        lines.append(_node(e.id, e.kind, role, "box"))
    for t in model.threats:
        lines.append(_node(t.id, f"threat: {t.source}", "threat", "octagon"))
    for c in model.countermeasures:
        lines.append(_node(c.id, f"{c.property}: {c.tactic}", "countermeasure", "ellipse"))
    if model.knowledge_base is not None:
        kb = model.knowledge_base
        lines.append(_node(kb.id, "knowledge base", "knowledge_base", "cylinder"))
    for d in model.decisions:
        lines.append(_node(d.id, "decision", "decision", "diamond"))

    for r in model.relations:
        lines.append(_edge(r.source, r.target, r.label))
    for t in model.threats:
        lines += [_edge(t.id, target, "affects") for target in t.affects]
    for c in model.countermeasures:
        lines += [_edge(c.id, threat, "mitigates") for threat in c.mitigates]
    for c_id, kb_id in model.kb_links():
        lines.append(_edge(c_id, kb_id, "memorizes", "dotted"))
    for d in model.decisions:
        lines.append(_edge(d.id, d.resolves, "resolves"))
        lines += [_edge(d.id, c, "select") for c in d.selected]
        lines += [_edge(d.id, r.countermeasure, "reject", "dashed") for r in d.rejected]
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- markdown report -------------------------------------------------------------


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


def model_report(
    model: ModelGraph,
    catalog: Catalog | None = None,
    diagnostics: Iterable[Diagnostic] = (),
    filename: str = "<input>",
) -> str:
    catalog = catalog if catalog is not None else default_catalog()
    diagnostics = list(diagnostics)
    phases = phase_status(model, catalog)
    coverage = coverage_report(model)

    lines = [f"# {model.name}", "", f"Application domain: {model.app_domain}", ""]
    lines += [
        "## Summary",
        "",
        "| Entity | Count |",
        "| --- | ---: |",
        f"| Domain elements | {len(model.elements)} |",
        f"| Relations | {len(model.relations)} |",
        f"| Critical objects | {len(model.critical_objects)} |",
        f"| Threats | {len(model.threats)} |",
        f"| Countermeasures | {len(model.countermeasures)} |",
        f"| Knowledge base | {1 if model.knowledge_base else 0} |",
        f"| Decisions | {len(model.decisions)} |",
        "",
        "## Phase gates",
        "",
        f"Phases complete: {len(phases.complete)}/{len(phases.phases)}",
        "",
    ]
    for p in phases.phases:
        lines.append(f"- {p.phase}: {'complete' if p.complete else 'incomplete'}")
        lines += [f"  - {m}" for m in p.missing]

    lines += ["", "## Threats", ""]
    lines += [
        "| Threat | Status | Monitoring | Detection | Protection | Restoration |",
        "| --- | --- | --- | --- | --- | --- |",
    ]
    open_threats = []
    for t in model.threats:
        status = decision_status(model, t.id)
        if not status.decided:
            open_threats.append(t.id)
        c = coverage.for_threat(t.id)
        lines.append(
            f"| {t.id} | {status.state} | {_yes(c.monitoring_available)} | "
            f"{_yes(c.detection)} | {_yes(c.protection)} | {_yes(c.restoration)} |"
        )
    lines += ["", f"Knowledge base present: {_yes(coverage.knowledge_base_present)}", ""]
    if open_threats:
        lines.append("Open threats: " + ", ".join(f"`{t}`" for t in open_threats))
    else:
        lines.append("Open threats: none")

    lines += ["", "## Diagnostics", ""]
    if diagnostics:
        lines += ["```"] + [d.render(filename) for d in diagnostics] + ["```"]
    else:
        lines.append("_No findings._")

    valid = [d for d in model.decisions if is_valid_decision(model, d)]
    if valid:
        lines += ["", "## Decision records"]
        for d in valid:
            lines += ["", decision_record(model, d.id, catalog).rstrip("\n")]
    return "\n".join(lines) + "\n"
