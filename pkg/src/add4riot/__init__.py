"""Model compiler and analysis toolkit for resilient IoT application designs."""

from .catalog import (
    Catalog,
    CatalogError,
    applicable_tactics,
    default_catalog,
    domain_risk_rows,
    load_catalog,
    tactics_for_property,
)
from .decisions import DecisionError, decision_record, decision_status
from .diagnostics import Diagnostic, ParseError, ResolveError, Severity, Span
from .export import model_report, pretty_print, to_canonical_json, to_dot
from .model import ModelGraph, decided_threats, element_class, hosted_closure
from .parser import load_model, parse_model, resolve
from .simulator import SimConfig, parse_scenario, run
from .validator import coverage_report, phase_status, validate

__all__ = [
    "Catalog",
    "CatalogError",
    "DecisionError",
    "Diagnostic",
    "ModelGraph",
    "ParseError",
    "ResolveError",
    "Severity",
    "SimConfig",
    "Span",
    "applicable_tactics",
    "coverage_report",
    "decided_threats",
    "decision_record",
    "decision_status",
    "default_catalog",
    "domain_risk_rows",
    "element_class",
    "hosted_closure",
    "load_catalog",
    "load_model",
    "model_report",
    "parse_model",
    "parse_scenario",
    "phase_status",
    "pretty_print",
    "resolve",
    "run",
    "tactics_for_property",
    "to_canonical_json",
    "to_dot",
    "validate",
]
