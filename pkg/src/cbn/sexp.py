"""Minimal s-expression reading/writing for the SMT-LIB 2 wire format."""

from __future__ import annotations

from fractions import Fraction
from typing import IO, Iterator, Optional, Union

SExp = Union[str, list]


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append(ch)
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            tokens.append(text[i : j + 1])
            i = j + 1
        elif ch == "|":
            j = text.index("|", i + 1)
            tokens.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '();"|':
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def parse_all(text: str) -> list[SExp]:
    tokens = tokenize(text)
    pos = 0

    def read() -> SExp:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(read())
            if pos >= len(tokens):
                raise ValueError("unbalanced s-expression")
            pos += 1
            return items
        if tok == ")":
            raise ValueError("unexpected ')'")
        return tok

    out = []
    while pos < len(tokens):
        out.append(read())
    return out


def parse_one(text: str) -> SExp:
    forms = parse_all(text)
    if len(forms) != 1:
        raise ValueError(f"expected one s-expression, found {len(forms)}")
    return forms[0]


def read_forms(stream: IO[str]) -> Iterator[str]:
    """Complete top-level forms from a character stream, as raw text."""
    buf = ""
    depth = 0
    start = 0
    while True:
        line = stream.readline()
        if line == "":
            return
        buf += line
        i = start
        in_comment = False
        while i < len(buf):
            ch = buf[i]
            if in_comment:
                if ch == "\n":
                    in_comment = False
            elif ch == ";":
                in_comment = True
            elif ch == '"':
                j = buf.find('"', i + 1)
                if j < 0:
                    break
                i = j
            elif ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0:
                    form = buf[: i + 1].strip()
                    if form:
                        yield form
                    buf = buf[i + 1 :]
                    i = -1
            elif depth == 0 and not ch.isspace():
                # bare atom at top level: emit when the line ends
                j = i
                while j < len(buf) and not buf[j].isspace() and buf[j] not in "();":
                    j += 1
                if j < len(buf):
                    yield buf[i:j]
                    buf = buf[j:]
                    i = -1
            i += 1
        start = len(buf) if depth > 0 else 0


def value_to_fraction(v: SExp) -> Optional[Fraction]:
    """Numeric model value to an exact rational; None when not numeric
    (e.g. algebraic root expressions)."""
    if isinstance(v, str):
        text = v.rstrip("?")  # some solvers mark truncated decimals
        try:
            return Fraction(text)
        except ValueError:
            return None
    if isinstance(v, list) and v:
        head = v[0]
        if head == "-" and len(v) == 2:
            inner = value_to_fraction(v[1])
            return None if inner is None else -inner
        if head == "/" and len(v) == 3:
            num = value_to_fraction(v[1])
            den = value_to_fraction(v[2])
            if num is None or den is None or den == 0:
                return None
            return num / den
    return None


def fraction_to_smt(v: Fraction) -> str:
    """Exact rational literal in SMT-LIB Real syntax (quotient form)."""
    if v < 0:
        return f"(- {fraction_to_smt(-v)})"
    if v.denominator == 1:
        return f"{v.numerator}.0"
    return f"(/ {v.numerator}.0 {v.denominator}.0)"
