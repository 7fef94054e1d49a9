"""Decision semantics: partition checks, status queries and decision records."""

from __future__ import annotations

from dataclasses import dataclass, field

from .catalog import Catalog, default_catalog
from .diagnostics import Diagnostic
from .model import Decision, ModelGraph, decided_threats, is_known_role


class DecisionError(ValueError):
    """A decision record was requested for a decision with blocking findings."""

    def __init__(self, decision_id: str, codes: list[str]) -> None:
        self.decision_id = decision_id
        self.codes = codes
        super().__init__(f"decision '{decision_id}' is invalid ({', '.join(codes)})")


def decision_findings(model: ModelGraph, decision: Decision) -> list[Diagnostic]:
    """E007/E008 findings for one decision."""
    out: list[Diagnostic] = []

    def e007(message: str) -> None:
        out.append(Diagnostic("E007", message, decision.span, decision.id))

    owner = decided_threats(model).get(decision.resolves)
    if owner is not None and owner != decision.id:
        e007(f"threat '{decision.resolves}' is already resolved by decision '{owner}'")
    if not decision.selected:
        e007("decision selects no countermeasure")
    overlap = [cm for cm in decision.selected if cm in decision.rejected_ids]
    if overlap:
        e007(f"countermeasure(s) both selected and rejected: {', '.join(overlap)}")
    for cm_id in dict.fromkeys(decision.selected + decision.rejected_ids):
        if decision.resolves not in model.countermeasure(cm_id).mitigates:
            e007(f"'{cm_id}' is not a candidate: it does not mitigate '{decision.resolves}'")
    for rej in decision.rejected:
        if not rej.rationale.strip():
            out.append(
                Diagnostic(
                    "E008",
                    f"rejection of '{rej.countermeasure}' has an empty rationale",
                    rej.span or decision.span,
                    decision.id,
                )
            )
    return out


def is_valid_decision(model: ModelGraph, decision: Decision) -> bool:
    return not decision_findings(model, decision)


@dataclass(frozen=True)
class DecisionStatus:
    state: str  # "open" | "decided"
    decision: str | None = None
    selected: tuple[str, ...] = field(default=())
    rejected: tuple[str, ...] = field(default=())

    @property
    def decided(self) -> bool:
        return self.state == "decided"


def decision_status(model: ModelGraph, threat_id: str) -> DecisionStatus:
    model.threat(threat_id)
    decision_id = decided_threats(model)[threat_id]
    if decision_id is None:
        return DecisionStatus("open")
    decision = model.decision(decision_id)
    if not is_valid_decision(model, decision):
        return DecisionStatus("open")
    return DecisionStatus("decided", decision.id, decision.selected, decision.rejected_ids)


def _option_line(model: ModelGraph, catalog: Catalog, cm_id: str) -> str:
    cm = model.countermeasure(cm_id)
    line = f"- `{cm.id}` ({cm.property} / {cm.tactic})"
    tactic = catalog.tactic(cm.tactic)
    text = cm.description or (tactic.description if tactic else "")
    return f"{line}: {text}" if text else line


def decision_record(
    model: ModelGraph, decision_id: str, catalog: Catalog | None = None
) -> str:
    """Render one decision as a markdown architecture decision record."""
    decision = model.decision(decision_id)
    findings = decision_findings(model, decision)
    if findings:
        raise DecisionError(decision_id, sorted({d.code for d in findings}))
    catalog = catalog if catalog is not None else default_catalog()
    threat = model.threat(decision.resolves)

    lines = [f"# Decision {decision.id}", "", "## Context", ""]
    layer = f", layer: {threat.layer}" if threat.layer else ""
    lines.append(
        f"Threat `{threat.id}` (source: {threat.source}{layer}, type: {threat.threat_type})"
    )
    lines += [
        "",
        f"- Motivation: {threat.motivation}",
        f"- Cause: {threat.cause}",
        "- Affected critical objects: " + ", ".join(f"`{e}`" for e in threat.affects),
        "",
        "## Concern",
        "",
        decision.concern,
        "",
        "## Options considered",
        "",
    ]
    lines += [_option_line(model, catalog, c.id) for c in model.candidates(threat.id)]
    lines += ["", "## Decision", ""]
    lines += [f"- `{cm}`" for cm in decision.selected]
    if decision.rationale:
        lines += ["", f"Rationale: {decision.rationale}"]
    lines += ["", "## Rejected", ""]
    if decision.rejected:
        lines += [f"- `{r.countermeasure}`: {r.rationale}" for r in decision.rejected]
    else:
        lines.append("_None._")
    lines += ["", "## Stakeholders", ""]
    if decision.stakeholders:
        lines += [
            f"- {role}" if is_known_role(role) else f"- other({role})"
            for role in decision.stakeholders
        ]
    else:
        lines.append("_None recorded._")
    return "\n".join(lines) + "\n"
