"""Tokenizer for the ``.riot`` model language.

Tokenization never fails: characters that start no token become ``ERROR``
tokens and a string missing its closing quote becomes ``UNTERMINATED``; the
parser turns those into diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .diagnostics import Span
from .model import ELEMENT_KINDS


class TokenKind(Enum):
    KEYWORD = "keyword"
    IDENT = "identifier"
    STRING = "string"
    LBRACE = "'{'"
    RBRACE = "'}'"
    LPAREN = "'('"
    RPAREN = "')'"
    COLON = "':'"
    COMMA = "','"
    EQUALS = "'='"
    ARROW = "'->'"
    DASH = "'-'"
    ERROR = "invalid character"
    UNTERMINATED = "unterminated string"
    EOF = "end of input"


TOP_LEVEL_KEYWORDS = frozenset(
    {"application", "critical", "threat", "countermeasure", "knowledge_base", "decision"}
    | ELEMENT_KINDS
)
FIELD_KEYWORDS = frozenset(
    {
        "domain", "justification",
        "source", "layer", "type", "motivation", "cause", "affects",
        "property", "tactic", "mitigates", "description",
        "resolves", "concern", "select", "reject", "rationale", "stakeholders",
    }
)
KEYWORDS = TOP_LEVEL_KEYWORDS | FIELD_KEYWORDS

_PUNCT = {
    "{": TokenKind.LBRACE,
    "}": TokenKind.RBRACE,
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
    ":": TokenKind.COLON,
    ",": TokenKind.COMMA,
    "=": TokenKind.EQUALS,
}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    value: str
    span: Span

    def __repr__(self) -> str:
        return f"{self.kind.name}({self.value!r})"


def _is_ident_start(ch: str) -> bool:
    return ch == "_" or ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def _is_ident_char(ch: str) -> bool:
    return _is_ident_start(ch) or ("0" <= ch <= "9")


class _Cursor:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.byte = 0
        self.line = 1
        self.col = 1

    def peek(self, ahead: int = 0) -> str:
        i = self.pos + ahead
        return self.text[i] if i < len(self.text) else ""

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        self.byte += len(ch.encode("utf-8"))
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def mark(self) -> tuple[int, int, int]:
        return self.byte, self.line, self.col

    def span_from(self, mark: tuple[int, int, int]) -> Span:
        start, line, col = mark
        return Span(start, self.byte, line, col)


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens (no trailing EOF token)."""
    cur = _Cursor(source)
    tokens: list[Token] = []
    while cur.peek():
        ch = cur.peek()
        if ch in " \t\r\n\f\v":
            cur.advance()
            continue
        if ch == "#":
            while cur.peek() and cur.peek() != "\n":
                cur.advance()
            continue
        mark = cur.mark()
        if _is_ident_start(ch):
            start = cur.pos
            while cur.peek() and _is_ident_char(cur.peek()):
                cur.advance()
            word = source[start : cur.pos]
            kind = TokenKind.KEYWORD if word in KEYWORDS else TokenKind.IDENT
            tokens.append(Token(kind, word, cur.span_from(mark)))
        elif ch == '"':
            tokens.append(_string(cur, mark))
        elif ch == "-":
            cur.advance()
            if cur.peek() == ">":
                cur.advance()
                tokens.append(Token(TokenKind.ARROW, "->", cur.span_from(mark)))
            else:
                tokens.append(Token(TokenKind.DASH, "-", cur.span_from(mark)))
        elif ch in _PUNCT:
            cur.advance()
            tokens.append(Token(_PUNCT[ch], ch, cur.span_from(mark)))
        else:
            cur.advance()
            tokens.append(Token(TokenKind.ERROR, ch, cur.span_from(mark)))
    return tokens


def _string(cur: _Cursor, mark: tuple[int, int, int]) -> Token:
    cur.advance()  # opening quote
    chars: list[str] = []
    while True:
        ch = cur.peek()
        # A raw newline ends an unterminated string so recovery can resume.
        if ch == "" or ch == "\n":
            return Token(TokenKind.UNTERMINATED, "".join(chars), cur.span_from(mark))
        cur.advance()
        if ch == '"':
            return Token(TokenKind.STRING, "".join(chars), cur.span_from(mark))
        if ch == "\\" and cur.peek() in ('"', "\\"):
            chars.append(cur.advance())
        elif ch == "\\" and cur.peek() == "n":
            cur.advance()
            chars.append("\n")
        else:
            chars.append(ch)


def quote(text: str) -> str:
    """Render ``text`` as a string literal the tokenizer reads back verbatim."""
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'
