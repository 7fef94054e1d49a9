"""Recursive-descent parser for ``.riot`` models, plus resolution to a ModelGraph.

Grammar (terminals quoted)::

    model    := header item*
    header   := "application" STRING "domain" IDENT
    item     := element | relation | critical | threat | counterm | kb | decision
    element  := KIND IDENT [ "{" attr* "}" ]
    relation := IDENT "-" LABEL "->" IDENT
    critical := "critical" IDENT {"," IDENT} [ "justification" ":" STRING ]
    threat   := "threat" IDENT "{" field* "}"
    counterm := "countermeasure" IDENT "{" field* "}"
    kb       := "knowledge_base" IDENT [ "{" attr* "}" ]
    decision := "decision" IDENT "{" field* "}"
    rej      := IDENT "(" STRING ")"
    attr     := IDENT "=" STRING

Block fields may appear in any order; duplicates are P004 and missing
required fields P005. After an error the parser skips to the next top-level
keyword.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from typing import Callable, Union

from .diagnostics import Diagnostic, ParseError, ResolveError, Span, has_errors
from .lexer import TOP_LEVEL_KEYWORDS, Token, TokenKind, tokenize
from .model import (
    ELEMENT_KINDS,
    RELATION_LABELS,
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


# --- declarations ----------------------------------------------------------
# Raw, unresolved declarations. ``spans`` maps field name -> span of its value.


@dataclass
class HeaderDecl:
    name: str
    domain: str
    span: Span
    spans: dict[str, Span] = field(default_factory=dict)


@dataclass
class ElementDecl:
    id: str
    kind: str
    attributes: list[tuple[str, str]]
    span: Span
    spans: dict[str, Span] = field(default_factory=dict)


@dataclass
class RelationDecl:
    source: str
    label: str
    target: str
    span: Span
    spans: dict[str, Span] = field(default_factory=dict)


@dataclass
class CriticalDecl:
    elements: list[tuple[str, Span]]
    justification: str | None
    span: Span
    spans: dict[str, Span] = field(default_factory=dict)


@dataclass
class ThreatDecl:
    id: str
    fields: dict[str, object]
    span: Span
    spans: dict[str, Span] = field(default_factory=dict)


@dataclass
class CountermeasureDecl:
    id: str
    fields: dict[str, object]
    span: Span
    spans: dict[str, Span] = field(default_factory=dict)


@dataclass
class KnowledgeBaseDecl:
    id: str
    description: str | None
    span: Span
    spans: dict[str, Span] = field(default_factory=dict)


@dataclass
class DecisionDecl:
    id: str
    fields: dict[str, object]
    span: Span
    spans: dict[str, Span] = field(default_factory=dict)


Declaration = Union[
    HeaderDecl,
    ElementDecl,
    RelationDecl,
    CriticalDecl,
    ThreatDecl,
    CountermeasureDecl,
    KnowledgeBaseDecl,
    DecisionDecl,
]


@dataclass
class ParseResult:
    declarations: list[Declaration]
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return not has_errors(self.diagnostics)

    def of_type(self, cls: type) -> list:
        return [d for d in self.declarations if isinstance(d, cls)]


# --- field schemas ---------------------------------------------------------
# value shapes: "name" (IDENT), "string", "names" (IDENT list), "rejects"

_THREAT_FIELDS = {
    "source": ("name", True),
    "layer": ("name", False),
    "type": ("name", True),
    "motivation": ("string", True),
    "cause": ("string", True),
    "affects": ("names", True),
}
_COUNTERMEASURE_FIELDS = {
    "property": ("name", True),
    "tactic": ("name", True),
    "mitigates": ("names", True),
    "description": ("string", False),
}
_DECISION_FIELDS = {
    "resolves": ("name", True),
    "concern": ("string", True),
    "select": ("names", True),
    "reject": ("rejects", False),
    "rationale": ("string", False),
    "stakeholders": ("names", False),
}


class _Abort(Exception):
    """Unwinds the current declaration after a diagnostic was recorded."""


class _Parser:
    def __init__(self, source: str) -> None:
        self.tokens = tokenize(source)
        end = len(source.encode("utf-8"))
        last_line = source.count("\n") + 1
        last_col = len(source) - (source.rfind("\n") + 1) + 1
        self.tokens.append(Token(TokenKind.EOF, "", Span(end, end, last_line, last_col)))
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []
        self.declarations: list[Declaration] = []

    # -- token helpers --
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def at_keyword(self, *words: str) -> bool:
        return self.tok.kind is TokenKind.KEYWORD and self.tok.value in words

    def error(self, code: str, message: str, span: Span, subject: str | None = None) -> None:
        self.diagnostics.append(Diagnostic(code, message, span, subject))

    def unexpected(self, expected: str) -> _Abort:
        tok = self.tok
        if tok.kind is TokenKind.UNTERMINATED:
            self.error("P002", "unterminated string literal", tok.span)
        else:
            found = tok.kind.value if tok.kind is TokenKind.EOF else f"{tok.value!r}"
            self.error("P001", f"unexpected {found}; expected {expected}", tok.span)
        return _Abort()

    def expect(self, kind: TokenKind, expected: str | None = None) -> Token:
        if self.tok.kind is not kind:
            raise self.unexpected(expected or kind.value)
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.unexpected(f"'{word}'")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        return self.expect(TokenKind.IDENT, what)

    def expect_name(self, what: str = "name") -> Token:
        # Value positions accept keywords too (e.g. a tactic key that happens
        # to be spelled like a field name).
        if self.tok.kind not in (TokenKind.IDENT, TokenKind.KEYWORD):
            raise self.unexpected(what)
        return self.advance()

    def expect_string(self) -> Token:
        return self.expect(TokenKind.STRING, "string")

    def recover(self) -> None:
        while self.tok.kind is not TokenKind.EOF and not (
            self.tok.kind is TokenKind.KEYWORD and self.tok.value in TOP_LEVEL_KEYWORDS
        ):
            self.advance()

    # -- grammar --
    def parse(self) -> ParseResult:
        self.guarded(self.header)
        while self.tok.kind is not TokenKind.EOF:
            start = self.pos
            self.guarded(self.item)
            if self.pos == start:  # no progress: skip the offending token
                self.advance()
                self.recover()
        return ParseResult(self.declarations, self.diagnostics)

    def guarded(self, rule: Callable[[], None]) -> None:
        try:
            rule()
        except _Abort:
            self.recover()

    def header(self) -> None:
        if not self.at_keyword("application"):
            raise self.unexpected("application header ('application \"<name>\" domain <id>')")
        kw = self.advance()
        name = self.expect_string()
        self.expect_keyword("domain")
        dom = self.expect_name("application domain")
        self.declarations.append(
            HeaderDecl(
                name.value,
                dom.value,
                _join(kw.span, dom.span),
                {"name": name.span, "domain": dom.span},
            )
        )

    def item(self) -> None:
        tok = self.tok
        if tok.kind is TokenKind.KEYWORD:
            if tok.value in ELEMENT_KINDS:
                return self.element()
            rule = {
                "critical": self.critical,
                "threat": self.threat,
                "countermeasure": self.countermeasure,
                "knowledge_base": self.knowledge_base,
                "decision": self.decision,
            }.get(tok.value)
            if rule is not None:
                return rule()
            if tok.value == "application":
                self.advance()
                self.error("P001", "duplicate application header", tok.span)
                raise _Abort()
        if tok.kind is TokenKind.IDENT:
            return self.relation()
        raise self.unexpected("a declaration (element kind, relation, critical, threat, "
                              "countermeasure, knowledge_base or decision)")

    def attrs(self) -> tuple[list[tuple[str, str]], dict[str, Span]]:
        out: list[tuple[str, str]] = []
        spans: dict[str, Span] = {}
        if self.tok.kind is not TokenKind.LBRACE:
            return out, spans
        self.advance()
        while self.tok.kind is not TokenKind.RBRACE:
            key = self.expect_name("attribute name or '}'")
            self.expect(TokenKind.EQUALS)
            value = self.expect_string()
            if key.value in spans:
                self.error("P004", f"duplicate attribute '{key.value}'", key.span, key.value)
                continue
            spans[key.value] = value.span
            out.append((key.value, value.value))
        self.advance()
        return out, spans

    def element(self) -> None:
        kind = self.advance()
        ident = self.expect_ident("element identifier")
        attributes, spans = self.attrs()
        spans["id"] = ident.span
        end = self.tokens[self.pos - 1].span
        self.declarations.append(
            ElementDecl(ident.value, kind.value, attributes, _join(kind.span, end), spans)
        )

    def relation(self) -> None:
        src = self.advance()
        self.expect(TokenKind.DASH, "'-' (relation)")
        label = self.expect_name("relation label")
        self.expect(TokenKind.ARROW)
        dst = self.expect_ident("relation target")
        span = _join(src.span, dst.span)
        if label.value not in RELATION_LABELS:
            hint = _hint(label.value, sorted(RELATION_LABELS))
            self.error("P003", f"unknown relation label '{label.value}'{hint}", label.span)
            return
        self.declarations.append(
            RelationDecl(
                src.value,
                label.value,
                dst.value,
                span,
                {"from": src.span, "label": label.span, "to": dst.span},
            )
        )

    def critical(self) -> None:
        kw = self.advance()
        names = [self.expect_ident("critical element")]
        while self.tok.kind is TokenKind.COMMA:
            self.advance()
            names.append(self.expect_ident("critical element"))
        justification = None
        spans: dict[str, Span] = {}
        end = names[-1].span
        if self.at_keyword("justification"):
            self.advance()
            self.expect(TokenKind.COLON)
            tok = self.expect_string()
            justification, end = tok.value, tok.span
            spans["justification"] = tok.span
        self.declarations.append(
            CriticalDecl(
                [(n.value, n.span) for n in names], justification, _join(kw.span, end), spans
            )
        )

    def block(self, owner: Token, schema: dict[str, tuple[str, bool]]) -> tuple[dict, dict, Span]:
        self.expect(TokenKind.LBRACE)
        values: dict[str, object] = {}
        spans: dict[str, Span] = {}
        expected = ", ".join(f"'{name}'" for name in schema)
        while self.tok.kind is not TokenKind.RBRACE:
            key = self.tok
            if key.kind is not TokenKind.KEYWORD or key.value not in schema:
                raise self.unexpected(f"one of {expected} or '}}'")
            self.advance()
            self.expect(TokenKind.COLON)
            shape = schema[key.value][0]
            start = self.tok.span
            value = self.value(shape)
            if key.value in values:
                self.error("P004", f"duplicate field '{key.value}'", key.span, owner.value)
                continue
            values[key.value] = value
            spans[key.value] = _join(start, self.tokens[self.pos - 1].span)
        close = self.advance()
        for name, (_, required) in schema.items():
            if required and name not in values:
                self.error(
                    "P005", f"missing required field '{name}'", owner.span, owner.value
                )
        return values, spans, close.span

    def value(self, shape: str) -> object:
        if shape == "name":
            return self.expect_name()
        if shape == "string":
            return self.expect_string()
        if shape == "names":
            items = [self.expect_name()]
            while self.tok.kind is TokenKind.COMMA:
                self.advance()
                items.append(self.expect_name())
            return items
        rejects = [self.rejection()]
        while self.tok.kind is TokenKind.COMMA:
            self.advance()
            rejects.append(self.rejection())
        return rejects

    def rejection(self) -> tuple[Token, Token]:
        ident = self.expect_ident("rejected countermeasure")
        self.expect(TokenKind.LPAREN, "'(' and a rationale string")
        rationale = self.expect_string()
        self.expect(TokenKind.RPAREN)
        return ident, rationale

    def _block_decl(self, cls, schema) -> None:
        kw = self.advance()
        ident = self.expect_ident(f"{kw.value} identifier")
        n_before = len(self.diagnostics)
        values, spans, end = self.block(ident, schema)
        spans["id"] = ident.span
        if any(d.code == "P005" for d in self.diagnostics[n_before:]):
            return
        self.declarations.append(cls(ident.value, values, _join(kw.span, end), spans))

    def threat(self) -> None:
        self._block_decl(ThreatDecl, _THREAT_FIELDS)

    def countermeasure(self) -> None:
        self._block_decl(CountermeasureDecl, _COUNTERMEASURE_FIELDS)

    def decision(self) -> None:
        self._block_decl(DecisionDecl, _DECISION_FIELDS)

    def knowledge_base(self) -> None:
        kw = self.advance()
        ident = self.expect_ident("knowledge base identifier")
        attributes, spans = self.attrs()
        for key, _ in attributes:
            if key != "description":
                self.error("P001", f"unexpected attribute '{key}'; expected 'description'",
                           spans[key], ident.value)
        spans["id"] = ident.span
        end = self.tokens[self.pos - 1].span
        self.declarations.append(
            KnowledgeBaseDecl(ident.value, dict(attributes).get("description"),
                              _join(kw.span, end), spans)
        )


def _join(a: Span, b: Span) -> Span:
    return Span(a.start, max(a.end, b.end), a.line, a.column)


def _hint(name: str, candidates: list[str]) -> str:
    close = difflib.get_close_matches(name, candidates, n=1)
    return f" (did you mean '{close[0]}'?)" if close else ""


def parse_model(source: str) -> ParseResult:
    return _Parser(source).parse()


# --- resolution ------------------------------------------------------------


def _text(tok: object) -> str:
    return tok.value  # type: ignore[attr-defined]


def _names(toks: object) -> tuple[str, ...]:
    return tuple(t.value for t in toks)  # type: ignore[attr-defined,union-attr]


def resolve(result: ParseResult) -> ModelGraph:
    """Resolve declarations into a closed ModelGraph.

    Raises ParseError if ``result`` carries parse errors and ResolveError with
    E001/E002 diagnostics on duplicate or dangling identifiers.
    """
    if not result.ok:
        raise ParseError([d for d in result.diagnostics if d.is_error])
    diags: list[Diagnostic] = []
    headers = result.of_type(HeaderDecl)
    if not headers:
        raise ParseError([Diagnostic("P001", "missing application header")])
    header = headers[0]

    # Every named entity shares one namespace.
    kinds: dict[str, str] = {}
    first_span: dict[str, Span] = {}

    def declare(ident: str, what: str, span: Span) -> None:
        if ident in kinds:
            first = first_span[ident]
            diags.append(
                Diagnostic(
                    "E001",
                    f"duplicate identifier '{ident}' ({what}); first declared as "
                    f"{kinds[ident]} at {first.line}:{first.column}",
                    span,
                    ident,
                    related=(first,),
                )
            )
            return
        kinds[ident] = what
        first_span[ident] = span

    for d in result.declarations:
        if isinstance(d, ElementDecl):
            declare(d.id, "element", d.spans["id"])
        elif isinstance(d, ThreatDecl):
            declare(d.id, "threat", d.spans["id"])
        elif isinstance(d, CountermeasureDecl):
            declare(d.id, "countermeasure", d.spans["id"])
        elif isinstance(d, KnowledgeBaseDecl):
            declare(d.id, "knowledge_base", d.spans["id"])
        elif isinstance(d, DecisionDecl):
            declare(d.id, "decision", d.spans["id"])

    kbs = result.of_type(KnowledgeBaseDecl)
    for extra in kbs[1:]:
        first = kbs[0].spans["id"]
        diags.append(
            Diagnostic(
                "E001",
                f"second knowledge base '{extra.id}'; a model has at most one "
                f"(first '{kbs[0].id}' at {first.line}:{first.column})",
                extra.spans["id"],
                extra.id,
                related=(first,),
            )
        )

    def ref(ident: str, want: str, span: Span, subject: str | None) -> None:
        got = kinds.get(ident)
        if got == want:
            return
        if got is None:
            pool = sorted(k for k, v in kinds.items() if v == want)
            msg = f"unresolved {want} reference '{ident}'{_hint(ident, pool)}"
        else:
            msg = f"'{ident}' is a {got}, expected a {want}"
        diags.append(Diagnostic("E002", msg, span, subject))

    critical_seen: dict[str, Span] = {}
    for d in result.declarations:
        if isinstance(d, RelationDecl):
            ref(d.source, "element", d.spans["from"], d.source)
            ref(d.target, "element", d.spans["to"], d.source)
        elif isinstance(d, CriticalDecl):
            for name, span in d.elements:
                ref(name, "element", span, name)
                if name in critical_seen:
                    first = critical_seen[name]
                    diags.append(
                        Diagnostic(
                            "E001",
                            f"'{name}' declared critical twice (first at "
                            f"{first.line}:{first.column})",
                            span,
                            name,
                            related=(first,),
                        )
                    )
                else:
                    critical_seen[name] = span
        elif isinstance(d, ThreatDecl):
            for tok in d.fields["affects"]:  # type: ignore[union-attr]
                ref(tok.value, "element", tok.span, d.id)
        elif isinstance(d, CountermeasureDecl):
            for tok in d.fields["mitigates"]:  # type: ignore[union-attr]
                ref(tok.value, "threat", tok.span, d.id)
        elif isinstance(d, DecisionDecl):
            tok = d.fields["resolves"]
            ref(tok.value, "threat", tok.span, d.id)  # type: ignore[union-attr]
            for tok in d.fields["select"]:  # type: ignore[union-attr]
                ref(tok.value, "countermeasure", tok.span, d.id)
            for tok, _ in d.fields.get("reject", []):  # type: ignore[union-attr]
                ref(tok.value, "countermeasure", tok.span, d.id)

    if diags:
        raise ResolveError(sorted(diags, key=Diagnostic.sort_key))
    return _build(header, result.declarations)


def _build(header: HeaderDecl, decls: list[Declaration]) -> ModelGraph:
    elements, relations, criticals = [], [], []
    threats, cms, decisions = [], [], []
    kb = None
    for d in decls:
        if isinstance(d, ElementDecl):
            label = dict(d.attributes).get("label")
            attrs = tuple((k, v) for k, v in d.attributes if k != "label")
            elements.append(DomainElement(d.id, d.kind, label, attrs, span=d.spans["id"]))
        elif isinstance(d, RelationDecl):
            relations.append(Relation(d.source, d.label, d.target, span=d.span))
        elif isinstance(d, CriticalDecl):
            criticals.extend(
                CriticalObject(name, d.justification, span=span) for name, span in d.elements
            )
        elif isinstance(d, ThreatDecl):
            f = d.fields
            threats.append(
                IoTThreat(
                    d.id,
                    source=_text(f["source"]),
                    threat_type=_text(f["type"]),
                    motivation=_text(f["motivation"]),
                    cause=_text(f["cause"]),
                    affects=_names(f["affects"]),
                    layer=_text(f["layer"]) if "layer" in f else None,
                    span=d.spans["id"],
                )
            )
        elif isinstance(d, CountermeasureDecl):
            f = d.fields
            cms.append(
                ResilientCountermeasure(
                    d.id,
                    property=_text(f["property"]),
                    tactic=_text(f["tactic"]),
                    mitigates=_names(f["mitigates"]),
                    description=_text(f["description"]) if "description" in f else None,
                    span=d.spans["id"],
                )
            )
        elif isinstance(d, KnowledgeBaseDecl):
            kb = KnowledgeBase(d.id, d.description, span=d.spans["id"])
        elif isinstance(d, DecisionDecl):
            f = d.fields
            decisions.append(
                Decision(
                    d.id,
                    resolves=_text(f["resolves"]),
                    concern=_text(f["concern"]),
                    selected=_names(f["select"]),
                    rejected=tuple(
                        Rejection(ident.value, why.value, span=ident.span)
                        for ident, why in f.get("reject", [])  # type: ignore[union-attr]
                    ),
                    rationale=_text(f["rationale"]) if "rationale" in f else None,
                    stakeholders=_names(f.get("stakeholders", [])),
                    span=d.spans["id"],
                )
            )
    return ModelGraph(
        header.name,
        header.domain,
        tuple(elements),
        tuple(relations),
        tuple(criticals),
        tuple(threats),
        tuple(cms),
        kb,
        tuple(decisions),
        span=header.span,
    )


def load_model(source: str) -> ModelGraph:
    """Parse and resolve; raises ParseError or ResolveError."""
    return resolve(parse_model(source))
