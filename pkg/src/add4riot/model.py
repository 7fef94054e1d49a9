"""Domain types for the four ADD4RIOT packages and the resolved model graph.

Inputs (domain elements, critical objects), Issues (threats), Countermeasures
(countermeasures, knowledge base) and Decisions. Enumerated fields are kept as
plain strings so a model can carry an out-of-vocabulary value long enough for
the validator to report it; the enums below define the vocabularies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterator

from .diagnostics import Span

IDENT_PATTERN = r"[A-Za-z_][A-Za-z0-9_]*"


class ElementKind(str, Enum):
    DEVICE = "device"
    TAG = "tag"
    SENSOR = "sensor"
    ACTUATOR = "actuator"
    ACTIVE_DIGITAL_ARTEFACT = "active_digital_artefact"
    PASSIVE_DIGITAL_ARTEFACT = "passive_digital_artefact"
    SERVICE = "service"
    RESOURCE = "resource"
    NETWORK_RESOURCE = "network_resource"
    ON_DEVICE_RESOURCE = "on_device_resource"
    PHYSICAL_ENTITY = "physical_entity"
    HUMAN_USER = "human_user"


class ElementClass(str, Enum):
    HARDWARE = "hardware"
    SOFTWARE = "software"
    CONTEXT = "context"


_HARDWARE = {ElementKind.DEVICE, ElementKind.TAG, ElementKind.SENSOR, ElementKind.ACTUATOR}
_CONTEXT = {ElementKind.PHYSICAL_ENTITY, ElementKind.HUMAN_USER}


def element_class(kind: ElementKind | str) -> ElementClass:
    kind = ElementKind(kind)
    if kind in _HARDWARE:
        return ElementClass.HARDWARE
    if kind in _CONTEXT:
        return ElementClass.CONTEXT
    return ElementClass.SOFTWARE


class RelationLabel(str, Enum):
    HOSTS = "hosts"
    ATTACHED_TO = "attached_to"
    INVOKES = "invokes"
    SUBSCRIBES = "subscribes"
    READS = "reads"
    STORES = "stores"
    REPRESENTS = "represents"
    ASSOCIATED_WITH = "associated_with"


# Labels whose source must be hardware and which carry failure cascades.
HOSTING_LABELS = frozenset({RelationLabel.HOSTS.value, RelationLabel.ATTACHED_TO.value})


class ThreatSource(str, Enum):
    NATURE = "nature"
    HARDWARE = "hardware"
    HUMAN = "human"


class ThreatLayer(str, Enum):
    APPLICATION = "application"
    NETWORK = "network"
    PHYSICAL = "physical"


class ResilienceProperty(str, Enum):
    MONITORING = "monitoring"
    PROTECTION = "protection"
    DETECTION = "detection"
    RESTORATION = "restoration"


class StakeholderRole(str, Enum):
    DOMAIN_EXPERT = "domain_expert"
    RESILIENCE_EXPERT = "resilience_expert"
    DEVICE_DEVELOPER = "device_developer"
    SOFTWARE_DESIGNER = "software_designer"
    NETWORK_MANAGER = "network_manager"


KNOWN_DOMAINS = ("industrial", "smart_city", "health_wellbeing")


def is_known_role(role: str) -> bool:
    """Roles outside the five named ones are ``other(<label>)``."""
    return role in StakeholderRole._value2member_map_


def _values(enum: type[Enum]) -> frozenset[str]:
    return frozenset(m.value for m in enum)  # type: ignore[attr-defined]


ELEMENT_KINDS = _values(ElementKind)
RELATION_LABELS = _values(RelationLabel)
THREAT_SOURCES = _values(ThreatSource)
THREAT_LAYERS = _values(ThreatLayer)
PROPERTIES = _values(ResilienceProperty)


# Spans are carried for diagnostics only and never take part in equality.
def _span() -> Span | None:
    return field(default=None, compare=False, repr=False)  # type: ignore[return-value]


@dataclass(frozen=True)
class DomainElement:
    id: str
    kind: str
    label: str | None = None
    attributes: tuple[tuple[str, str], ...] = ()
    span: Span | None = _span()

    @property
    def element_class(self) -> ElementClass:
        return element_class(self.kind)

    def attribute(self, name: str) -> str | None:
        for key, value in self.attributes:
            if key == name:
                return value
        return None


@dataclass(frozen=True)
class Relation:
    source: str
    label: str
    target: str
    span: Span | None = _span()


@dataclass(frozen=True)
class CriticalObject:
    element: str
    justification: str | None = None
    span: Span | None = _span()


@dataclass(frozen=True)
class IoTThreat:
    id: str
    source: str
    threat_type: str
    motivation: str
    cause: str
    affects: tuple[str, ...]
    layer: str | None = None
    span: Span | None = _span()


@dataclass(frozen=True)
class ResilientCountermeasure:
    id: str
    property: str
    tactic: str
    mitigates: tuple[str, ...]
    description: str | None = None
    span: Span | None = _span()


@dataclass(frozen=True)
class KnowledgeBase:
    id: str
    description: str | None = None
    span: Span | None = _span()


@dataclass(frozen=True)
class Rejection:
    countermeasure: str
    rationale: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Decision:
    id: str
    resolves: str
    concern: str
    selected: tuple[str, ...]
    rejected: tuple[Rejection, ...] = ()
    rationale: str | None = None
    stakeholders: tuple[str, ...] = ()
    span: Span | None = _span()

    @property
    def rejected_ids(self) -> tuple[str, ...]:
        return tuple(r.countermeasure for r in self.rejected)


@dataclass(frozen=True)
class ModelGraph:
    """The resolved model. Collections keep declaration order."""

    name: str
    app_domain: str
    elements: tuple[DomainElement, ...] = ()
    relations: tuple[Relation, ...] = ()
    critical_objects: tuple[CriticalObject, ...] = ()
    threats: tuple[IoTThreat, ...] = ()
    countermeasures: tuple[ResilientCountermeasure, ...] = ()
    knowledge_base: KnowledgeBase | None = None
    decisions: tuple[Decision, ...] = ()
    span: Span | None = _span()

    @cached_property
    def _elements(self) -> dict[str, DomainElement]:
        return {e.id: e for e in self.elements}

    @cached_property
    def _threats(self) -> dict[str, IoTThreat]:
        return {t.id: t for t in self.threats}

    @cached_property
    def _countermeasures(self) -> dict[str, ResilientCountermeasure]:
        return {c.id: c for c in self.countermeasures}

    @cached_property
    def _decisions(self) -> dict[str, Decision]:
        return {d.id: d for d in self.decisions}

    @cached_property
    def critical_ids(self) -> frozenset[str]:
        return frozenset(c.element for c in self.critical_objects)

    def element(self, element_id: str) -> DomainElement:
        try:
            return self._elements[element_id]
        except KeyError:
            raise KeyError(f"unknown element {element_id!r}") from None

    def threat(self, threat_id: str) -> IoTThreat:
        try:
            return self._threats[threat_id]
        except KeyError:
            raise KeyError(f"unknown threat {threat_id!r}") from None

    def countermeasure(self, cm_id: str) -> ResilientCountermeasure:
        try:
            return self._countermeasures[cm_id]
        except KeyError:
            raise KeyError(f"unknown countermeasure {cm_id!r}") from None

    def decision(self, decision_id: str) -> Decision:
        try:
            return self._decisions[decision_id]
        except KeyError:
            raise KeyError(f"unknown decision {decision_id!r}") from None

    def has_element(self, element_id: str) -> bool:
        return element_id in self._elements

    def candidates(self, threat_id: str) -> list[ResilientCountermeasure]:
        """Countermeasures listing ``threat_id`` in their mitigates set."""
        return [c for c in self.countermeasures if threat_id in c.mitigates]

    def selected_ids(self) -> set[str]:
        return {cm for d in self.decisions for cm in d.selected}

    def selected_countermeasures(self) -> list[ResilientCountermeasure]:
        chosen = self.selected_ids()
        return [c for c in self.countermeasures if c.id in chosen]

    def kb_links(self) -> list[tuple[str, str]]:
        """Derived countermeasure -> knowledge base links."""
        if self.knowledge_base is None:
            return []
        return [(c.id, self.knowledge_base.id) for c in self.countermeasures]

    def entity_ids(self) -> Iterator[str]:
        yield from (e.id for e in self.elements)
        yield from (t.id for t in self.threats)
        yield from (c.id for c in self.countermeasures)
        if self.knowledge_base is not None:
            yield self.knowledge_base.id
        yield from (d.id for d in self.decisions)


def hosted_closure(model: ModelGraph, root: str) -> set[str]:
    """Elements reachable from ``root`` along hosts/attached_to edges, excluding root."""
    model.element(root)
    out: dict[str, list[str]] = {}
    for rel in model.relations:
        if rel.label in HOSTING_LABELS:
            out.setdefault(rel.source, []).append(rel.target)
    seen: set[str] = set()
    stack = [root]
    while stack:
        for nxt in out.get(stack.pop(), ()):
            if nxt not in seen and nxt != root:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def decided_threats(model: ModelGraph) -> dict[str, str | None]:
    """Map every threat to the first decision resolving it, or None."""
    first: dict[str, str] = {}
    for d in model.decisions:
        first.setdefault(d.resolves, d.id)
    return {t.id: first.get(t.id) for t in model.threats}
