"""Source spans and coded diagnostics shared by the parser and validator."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable


@dataclass(frozen=True)
class Span:
    """A region of source text.

    ``start``/``end`` are UTF-8 byte offsets; ``line``/``column`` are 1-based
    and count characters, not bytes.
    """

    start: int
    end: int
    line: int
    column: int

    def text(self, source: str) -> str:
        return source.encode("utf-8")[self.start : self.end].decode("utf-8")


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


def severity_for(code: str) -> Severity:
    return Severity.WARNING if code.startswith("W") else Severity.ERROR


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Span | None = None
    subject: str | None = None
    severity: Severity = field(default=None)  # type: ignore[assignment]
    related: tuple[Span, ...] = ()

    def __post_init__(self) -> None:
        if self.severity is None:
            object.__setattr__(self, "severity", severity_for(self.code))

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def sort_key(self) -> tuple:
        # Span-less (model-wide) findings sort after positioned ones.
        pos = self.span.start if self.span is not None else float("inf")
        return (pos, self.code, self.subject or "", self.message)

    def render(self, filename: str = "<input>") -> str:
        where = filename
        if self.span is not None:
            where = f"{filename}:{self.span.line}:{self.span.column}"
        head = f"{self.severity.value} {self.code} [{where}]"
        if self.subject:
            return f"{head} {self.subject}: {self.message}"
        return f"{head} {self.message}"


def sort_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=Diagnostic.sort_key)


def has_errors(diags: Iterable[Diagnostic]) -> bool:
    return any(d.is_error for d in diags)


class ModelError(Exception):
    """Base class for failures that carry diagnostics."""

    def __init__(self, diagnostics: Iterable[Diagnostic]) -> None:
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        super().__init__(first.render() if first else "model error")

    @property
    def codes(self) -> list[str]:
        return sorted({d.code for d in self.diagnostics})


class ParseError(ModelError):
    """The source has P0xx errors."""


class ResolveError(ModelError):
    """Resolution found duplicate or dangling identifiers (E001/E002)."""
