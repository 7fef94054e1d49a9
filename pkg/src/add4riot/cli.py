"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 validation errors (or warnings with
--strict), 3 parse/resolve failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Sequence, TextIO

from .catalog import CATALOG_ENV, Catalog, CatalogError, applicable_tactics, resolve_catalog
from .diagnostics import Diagnostic, ModelError, Severity
from .export import model_report, pretty_print, to_canonical_json, to_dot
from .decisions import decision_record, is_valid_decision
from .model import PROPERTIES, ModelGraph
from .parser import load_model
from .simulator import (
    ScenarioError,
    SimConfig,
    SimulationRefused,
    parse_scenario,
    render_trace,
    run,
)
from .validator import ALL_CODES, phase_status, validate

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_PARSE, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


class _Failure(Exception):
    def __init__(self, code: int, text: str = "") -> None:
        self.code = code
        self.text = text


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="add4riot", description="Resilient IoT architecture model compiler.")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def with_catalog(sp: argparse.ArgumentParser) -> argparse.ArgumentParser:
        sp.add_argument("--catalog", help=f"catalog file (default: ${CATALOG_ENV} or shipped)")
        return sp

    c = with_catalog(sub.add_parser("check", help="parse, resolve and validate models"))
    c.add_argument("models", nargs="+", metavar="MODEL")
    c.add_argument("--strict", action="store_true", help="treat warnings as errors")
    c.add_argument("--deny", nargs="+", default=[], metavar="CODE",
                   help="report these codes as errors")
    c.add_argument("--allow", nargs="+", default=[], metavar="CODE",
                   help="suppress these codes")

    ph = with_catalog(sub.add_parser("phase", help="report phase gates P1-P4"))
    ph.add_argument("model")

    s = with_catalog(sub.add_parser("suggest", help="list tactics applicable to a threat"))
    s.add_argument("model")
    s.add_argument("--threat", required=True)

    sim = with_catalog(sub.add_parser("simulate", help="run a threat scenario"))
    sim.add_argument("model")
    sim.add_argument("scenario")
    sim.add_argument("--restore-delay", type=int, default=2)
    sim.add_argument("--no-learned-block", action="store_true")

    ex = with_catalog(sub.add_parser("export", help="emit json, dot or riot"))
    ex.add_argument("model")
    ex.add_argument("--format", required=True, choices=["json", "dot", "riot"])
    ex.add_argument("-o", "--output")

    r = with_catalog(sub.add_parser("report", help="markdown report and decision records"))
    r.add_argument("model")
    r.add_argument("-o", "--output", metavar="DIR")

    cat = with_catalog(sub.add_parser("catalog", help="inspect the catalog"))
    cat_sub = cat.add_subparsers(dest="catalog_command", metavar="ACTION", parser_class=_Parser)
    lst = cat_sub.add_parser("list", help="list tactics")
    lst.add_argument("--catalog", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    group = lst.add_mutually_exclusive_group()
    group.add_argument("--property", choices=sorted(PROPERTIES))
    group.add_argument("--threat-type")
    return p


# --- helpers ---------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise _Failure(EXIT_IO, f"error: cannot read {path}: {exc}") from None


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Failure(EXIT_IO, f"error: cannot write {path}: {exc}") from None


def _catalog(args: argparse.Namespace) -> Catalog:
    try:
        return resolve_catalog(args.catalog)
    except OSError as exc:
        raise _Failure(EXIT_IO, f"error: cannot read catalog: {exc}") from None
    except CatalogError as exc:
        raise _Failure(EXIT_PARSE, f"error: catalog: {exc}") from None


def _model(path: str, out: TextIO) -> ModelGraph:
    text = _read(path)
    try:
        return load_model(text)
    except ModelError as exc:
        for d in exc.diagnostics:
            print(d.render(path), file=out)
        raise _Failure(EXIT_PARSE) from None


# --- commands --------------------------------------------------------------


def _check_one(path: str, args: argparse.Namespace, catalog: Catalog) -> tuple[int, str]:
    lines: list[str] = []
    try:
        text = _read(path)
    except _Failure as f:
        return f.code, f.text
    try:
        model = load_model(text)
        diags = validate(model, catalog)
        code = EXIT_OK
    except ModelError as exc:
        diags, code = exc.diagnostics, EXIT_PARSE
    allow = set(args.allow)
    deny = set(args.deny)
    shown: list[Diagnostic] = []
    for d in diags:
        if d.code in allow:
            continue
        if d.code in deny or (args.strict and d.severity is Severity.WARNING):
            d = replace(d, severity=Severity.ERROR)
        shown.append(d)
    lines += [d.render(path) for d in shown]
    if code == EXIT_OK and any(d.is_error for d in shown):
        code = EXIT_INVALID
    return code, "\n".join(lines)


def cmd_check(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    unknown = sorted(set(args.allow + args.deny) - set(ALL_CODES))
    if unknown:
        raise UsageError(f"unknown diagnostic code(s): {', '.join(unknown)}")
    catalog = _catalog(args)
    with ThreadPoolExecutor(max_workers=min(4, len(args.models))) as pool:
        results = list(pool.map(lambda p: _check_one(p, args, catalog), args.models))
    worst = EXIT_OK
    for code, text in results:
        if text:
            print(text, file=err if code == EXIT_IO else out)
        worst = max(worst, code)
    return worst


def cmd_phase(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    catalog = _catalog(args)
    model = _model(args.model, out)
    out.write(phase_status(model, catalog).render())
    return EXIT_OK


def cmd_suggest(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    catalog = _catalog(args)
    model = _model(args.model, out)
    try:
        threat = model.threat(args.threat)
    except KeyError:
        raise UsageError(f"unknown threat '{args.threat}'") from None
    try:
        tactics = applicable_tactics(catalog, threat.threat_type)
    except KeyError:
        print(f"error: threat type '{threat.threat_type}' is not in the catalog", file=out)
        return EXIT_INVALID
    print(f"{threat.id} ({threat.threat_type}):", file=out)
    for t in tactics:
        print(f"  {t.key}  [{t.property} / {t.family}]  {t.display_name}", file=out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    if args.restore_delay < 1:
        raise UsageError("--restore-delay must be >= 1")
    catalog = _catalog(args)
    model = _model(args.model, out)
    config = SimConfig(args.restore_delay, not args.no_learned_block)
    try:
        # Model errors are reported before scenario references are checked.
        result = run(model, parse_scenario(_read(args.scenario)), config, catalog)
    except ScenarioError as exc:
        print(f"error: {args.scenario}: {exc}", file=out)
        return EXIT_PARSE
    except SimulationRefused as exc:
        print(f"error: {exc}", file=out)
        return EXIT_INVALID
    out.write(render_trace(result))
    return EXIT_OK


def cmd_export(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    model = _model(args.model, err)
    text = {"json": to_canonical_json, "dot": to_dot, "riot": pretty_print}[args.format](model)
    if args.output:
        _write(Path(args.output), text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_report(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    catalog = _catalog(args)
    model = _model(args.model, out)
    diags = validate(model, catalog)
    report = model_report(model, catalog, diags, args.model)
    if not args.output:
        out.write(report)
        return EXIT_OK
    root = Path(args.output)
    _write(root / "report.md", report)
    for d in model.decisions:
        if is_valid_decision(model, d):
            _write(root / "decisions" / f"{d.id}.md", decision_record(model, d.id, catalog))
    return EXIT_OK


def cmd_catalog(args: argparse.Namespace, out: TextIO, err: TextIO) -> int:
    if args.catalog_command != "list":
        raise UsageError("expected 'catalog list'")
    catalog = _catalog(args)
    if args.threat_type:
        try:
            tactics = applicable_tactics(catalog, args.threat_type)
        except KeyError:
            raise UsageError(f"unknown threat type '{args.threat_type}'") from None
    elif args.property:
        tactics = [t for t in catalog.tactics if t.property == args.property]
    else:
        tactics = list(catalog.tactics)
    for t in tactics:
        print(f"{t.key}  [{t.property} / {t.family}]  {t.display_name}", file=out)
    return EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "phase": cmd_phase,
    "suggest": cmd_suggest,
    "simulate": cmd_simulate,
    "export": cmd_export,
    "report": cmd_report,
    "catalog": cmd_catalog,
}


def cli_main(
    argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None
) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().rstrip() + "\nadd4riot: error: missing command")
        return COMMANDS[args.command](args, out, err)
    except UsageError as exc:
        print(str(exc).rstrip(), file=err)
        return EXIT_USAGE
    except _Failure as f:
        if f.text:
            print(f.text, file=err)
        return f.code


def main() -> None:
    sys.exit(cli_main())
