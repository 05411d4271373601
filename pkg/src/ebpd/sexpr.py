"""Minimal s-expression reader with source spans.

Symbols are case-sensitive, `;` starts a comment that runs to end of line.
Every node remembers where it came from so parse errors can point at it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    end_line: int
    end_column: int
    file: Optional[str] = None

    def __post_init__(self):
        if (self.end_line, self.end_column) < (self.line, self.column):
            raise ValueError("span end precedes start")

    def __str__(self) -> str:
        where = f"{self.file}:" if self.file else ""
        return f"{where}{self.line}:{self.column}"


class ParseError(Exception):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


class Sym(str):
    """A symbol token; compares equal to the plain string."""

    span: Optional[SourceSpan]

    def __new__(cls, text: str, span: Optional[SourceSpan] = None):
        obj = super().__new__(cls, text)
        obj.span = span
        return obj


class SList(list):
    span: Optional[SourceSpan] = None


SExpr = Union[Sym, SList]


def _tokens(text: str, file: Optional[str]) -> Iterator[tuple[str, SourceSpan]]:
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
        elif ch.isspace():
            col, i = col + 1, i + 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
                col += 1
        elif ch in "()":
            yield ch, SourceSpan(line, col, line, col + 1, file)
            col, i = col + 1, i + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            yield text[i:j], SourceSpan(line, col, line, col + (j - i), file)
            col += j - i
            i = j


def read_all(text: str, file: Optional[str] = None) -> list[SExpr]:
    """Read every top-level form in `text`."""
    stack: list[SList] = []
    out: list[SExpr] = []
    last: Optional[SourceSpan] = None
    for tok, span in _tokens(text, file):
        last = span
        if tok == "(":
            node = SList()
            node.span = span
            stack.append(node)
        elif tok == ")":
            if not stack:
                raise ParseError("unbalanced ')'", span)
            node = stack.pop()
            start = node.span
            node.span = SourceSpan(start.line, start.column, span.end_line, span.end_column, file)
            (stack[-1] if stack else out).append(node)
        else:
            (stack[-1] if stack else out).append(Sym(tok, span))
    if stack:
        start = stack[-1].span
        end = last or start
        raise ParseError("unterminated '('", SourceSpan(start.line, start.column,
                                                       end.end_line, end.end_column, file))
    return out


def read_one(text: str, file: Optional[str] = None) -> SList:
    forms = read_all(text, file)
    if len(forms) != 1 or not isinstance(forms[0], SList):
        span = forms[1].span if len(forms) > 1 else None
        raise ParseError("expected exactly one top-level form", span)
    return forms[0]


def dump(expr) -> str:
    """Render nested lists/strings back to compact s-expression text."""
    if isinstance(expr, (list, tuple)):
        return "(" + " ".join(dump(e) for e in expr) + ")"
    return str(expr)


def tokens_of(text: str) -> list[str]:
    """Token stream with comments and layout removed (for text comparisons)."""
    return [tok for tok, _ in _tokens(text, None)]
