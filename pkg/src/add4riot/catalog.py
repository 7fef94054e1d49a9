"""Threat/tactic catalog: file format loader and queries.

The catalog is a line-oriented text file so it can be extended without
touching code::

    threat_type <key> source=<nature|hardware|human> [layer=<...>] name="..." [desc="..."]
    tactic <key> property=<...> family=<...> name="..." [desc="..."] [cite="..."]
    applies <tactic-key> <threat-type-key>
    domain_row domain=<...> object=<class-or-kind> sources=<a,b,...>

``#`` starts a comment. Unknown directives and unknown attributes are errors.
"""

from __future__ import annotations

import os
import re
import shlex
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .model import (
    ELEMENT_KINDS,
    PROPERTIES,
    THREAT_LAYERS,
    THREAT_SOURCES,
    ElementClass,
    ResilienceProperty,
    ThreatSource,
    element_class,
)

CATALOG_ENV = "ADD4RIOT_CATALOG"

FAMILY_PROPERTY = {
    "autonomic_architecture": ResilienceProperty.MONITORING,
    "redundancy": ResilienceProperty.PROTECTION,
    "self_protection": ResilienceProperty.PROTECTION,
    "detection_technique": ResilienceProperty.DETECTION,
    "self_configuration": ResilienceProperty.RESTORATION,
    "self_healing": ResilienceProperty.RESTORATION,
    "self_optimization": ResilienceProperty.RESTORATION,
    "fault_recovery": ResilienceProperty.RESTORATION,
    "disaster_recovery": ResilienceProperty.RESTORATION,
}

_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class CatalogError(ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ThreatTypeEntry:
    key: str
    source: str
    display_name: str
    layer: str | None = None
    description: str = ""


@dataclass(frozen=True)
class TacticEntry:
    key: str
    property: str
    family: str
    display_name: str
    description: str = ""
    citation: str | None = None


@dataclass(frozen=True)
class DomainRiskRow:
    app_domain: str
    object_class: str
    sources: frozenset[str]


@dataclass(frozen=True)
class Catalog:
    threat_types: tuple[ThreatTypeEntry, ...] = ()
    tactics: tuple[TacticEntry, ...] = ()
    applicability: tuple[tuple[str, str], ...] = ()
    domain_rows: tuple[DomainRiskRow, ...] = ()
    version: str = ""
    _tactic_index: dict[str, TacticEntry] = field(
        default_factory=dict, compare=False, repr=False
    )
    _type_index: dict[str, ThreatTypeEntry] = field(
        default_factory=dict, compare=False, repr=False
    )

    def __post_init__(self) -> None:
        self._tactic_index.update((t.key, t) for t in self.tactics)
        self._type_index.update((t.key, t) for t in self.threat_types)

    def tactic(self, key: str) -> TacticEntry | None:
        return self._tactic_index.get(key)

    def threat_type(self, key: str) -> ThreatTypeEntry | None:
        return self._type_index.get(key)

    def is_applicable(self, tactic: str, threat_type: str) -> bool:
        return (tactic, threat_type) in self.applicability


def tactics_for_property(catalog: Catalog, prop: str) -> list[TacticEntry]:
    return [t for t in catalog.tactics if t.property == prop]


def applicable_tactics(catalog: Catalog, threat_type: str) -> list[TacticEntry]:
    if catalog.threat_type(threat_type) is None:
        raise KeyError(f"unknown threat type {threat_type!r}")
    keys = {tac for tac, tt in catalog.applicability if tt == threat_type}
    return [t for t in catalog.tactics if t.key in keys]


def domain_risk_rows(catalog: Catalog, app_domain: str, object_class: str) -> set[str]:
    """Threat sources the risk table lists for a domain and object class or kind.

    Rows for a specific element kind take precedence over the broader
    hardware/software rows.
    """
    rows = [r for r in catalog.domain_rows if r.app_domain == app_domain]
    if object_class in ELEMENT_KINDS:
        specific = [r for r in rows if r.object_class == object_class]
        if specific:
            return set().union(*(r.sources for r in specific))
        object_class = element_class(object_class).value
    return set().union(*(r.sources for r in rows if r.object_class == object_class))


# --- loading ---------------------------------------------------------------

_DIRECTIVE_ATTRS = {
    "threat_type": ({"source", "name"}, {"layer", "desc"}),
    "tactic": ({"property", "family", "name"}, {"desc", "cite"}),
    "domain_row": ({"domain", "object", "sources"}, set()),
}


def _split_attrs(words: list[str], directive: str, line: int) -> dict[str, str]:
    required, optional = _DIRECTIVE_ATTRS[directive]
    attrs: dict[str, str] = {}
    for word in words:
        name, eq, value = word.partition("=")
        if not eq:
            raise CatalogError(f"expected name=value, got {word!r}", line)
        if name not in required | optional:
            raise CatalogError(f"unknown attribute {name!r} for {directive}", line)
        if name in attrs:
            raise CatalogError(f"duplicate attribute {name!r}", line)
        attrs[name] = value
    missing = sorted(required - attrs.keys())
    if missing:
        raise CatalogError(f"{directive} missing {', '.join(missing)}", line)
    return attrs


def _check_key(key: str, line: int) -> str:
    if not _KEY.match(key):
        raise CatalogError(f"invalid key {key!r}", line)
    return key


def load_catalog(source: str, version: str = "") -> Catalog:
    threat_types: list[ThreatTypeEntry] = []
    tactics: list[TacticEntry] = []
    applies: list[tuple[str, str, int]] = []
    rows: list[DomainRiskRow] = []
    type_lines: dict[str, int] = {}
    tactic_lines: dict[str, int] = {}

    for lineno, raw in enumerate(source.splitlines(), start=1):
        try:
            words = shlex.split(raw, comments=True)
        except ValueError as exc:
            raise CatalogError(f"syntax error: {exc}", lineno) from None
        if not words:
            continue
        directive, rest = words[0], words[1:]

        if directive == "threat_type":
            if not rest:
                raise CatalogError("threat_type needs a key", lineno)
            key = _check_key(rest[0], lineno)
            a = _split_attrs(rest[1:], directive, lineno)
            if a["source"] not in THREAT_SOURCES:
                raise CatalogError(f"unknown threat source {a['source']!r}", lineno)
            layer = a.get("layer")
            if layer is not None and layer not in THREAT_LAYERS:
                raise CatalogError(f"unknown layer {layer!r}", lineno)
            if (layer is not None) != (a["source"] == ThreatSource.HUMAN):
                raise CatalogError("layer is given iff source=human", lineno)
            if key in type_lines:
                raise CatalogError(
                    f"duplicate threat type {key!r} (first on line {type_lines[key]})", lineno
                )
            type_lines[key] = lineno
            threat_types.append(
                ThreatTypeEntry(key, a["source"], a["name"], layer, a.get("desc", ""))
            )
        elif directive == "tactic":
            if not rest:
                raise CatalogError("tactic needs a key", lineno)
            key = _check_key(rest[0], lineno)
            a = _split_attrs(rest[1:], directive, lineno)
            prop, family = a["property"], a["family"]
            if prop not in PROPERTIES:
                raise CatalogError(f"unknown property {prop!r}", lineno)
            if family not in FAMILY_PROPERTY:
                raise CatalogError(f"unknown family {family!r}", lineno)
            if FAMILY_PROPERTY[family] != prop:
                raise CatalogError(
                    f"family {family!r} belongs to property "
                    f"{FAMILY_PROPERTY[family].value!r}, not {prop!r}",
                    lineno,
                )
            if key in tactic_lines:
                raise CatalogError(
                    f"duplicate tactic {key!r} (first on line {tactic_lines[key]})", lineno
                )
            tactic_lines[key] = lineno
            tactics.append(
                TacticEntry(key, prop, family, a["name"], a.get("desc", ""), a.get("cite"))
            )
        elif directive == "applies":
            if len(rest) != 2:
                raise CatalogError("applies takes <tactic-key> <threat-type-key>", lineno)
            applies.append((rest[0], rest[1], lineno))
        elif directive == "domain_row":
            a = _split_attrs(rest, directive, lineno)
            obj = a["object"]
            if obj not in ELEMENT_KINDS and obj not in (
                ElementClass.HARDWARE,
                ElementClass.SOFTWARE,
            ):
                raise CatalogError(f"unknown object class or kind {obj!r}", lineno)
            sources = frozenset(s for s in a["sources"].split(",") if s)
            bad = sorted(sources - THREAT_SOURCES)
            if bad:
                raise CatalogError(f"unknown threat source(s) {', '.join(bad)}", lineno)
            rows.append(DomainRiskRow(a["domain"], obj, sources))
        else:
            raise CatalogError(f"unknown directive {directive!r}", lineno)

    pairs: list[tuple[str, str]] = []
    for tac, tt, lineno in applies:
        if tac not in tactic_lines or tt not in type_lines:
            missing = [
                f"{what} {key!r}"
                for what, key, known in (
                    ("tactic", tac, tactic_lines),
                    ("threat type", tt, type_lines),
                )
                if key not in known
            ]
            raise CatalogError(
                f"dangling applies {tac} -> {tt}: unknown {' and '.join(missing)}", lineno
            )
        if (tac, tt) not in pairs:
            pairs.append((tac, tt))

    return Catalog(tuple(threat_types), tuple(tactics), tuple(pairs), tuple(rows), version)


def load_catalog_file(path: str | os.PathLike[str]) -> Catalog:
    path = Path(path)
    return load_catalog(path.read_text(encoding="utf-8"), version=path.name)


def default_catalog_text() -> str:
    return resources.files("add4riot").joinpath("data/default.catalog").read_text("utf-8")


def default_catalog() -> Catalog:
    return load_catalog(default_catalog_text(), version="default")


def resolve_catalog(path: str | os.PathLike[str] | None = None) -> Catalog:
    """Explicit path, then $ADD4RIOT_CATALOG, then the shipped default."""
    path = path or os.environ.get(CATALOG_ENV)
    if path:
        return load_catalog_file(path)
    return default_catalog()
