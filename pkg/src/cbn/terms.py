"""Expression trees for arithmetic terms, constraints, and queries.

Terms are built from exact rational constants, named real variables, sum
and product; negation, subtraction, and division are surface sugar.
Constraints are quantifier-free comparisons closed under negation and
conjunction, with =, >=, >, and | as derived forms that are expanded
before anything is handed to a decision procedure.  Queries add an
existential prefix on top of constraints.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Optional


class TermError(Exception):
    """Raised for malformed terms, unbound variables, or division by zero."""


class ParseError(TermError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class VarKind(enum.Enum):
    PROB = "x"          # ranges over probability-table parameters
    MARGINAL = "mp"     # denotes a marginal probability, defined in C

    def __repr__(self):
        return f"VarKind.{self.name}"


# --------------------------------------------------------------------------
# Term AST


class Term:
    __slots__ = ()

    def __add__(self, other):
        return Add(self, _as_term(other))

    def __sub__(self, other):
        return Sub(self, _as_term(other))

    def __mul__(self, other):
        return Mul(self, _as_term(other))

    def __truediv__(self, other):
        return Div(self, _as_term(other))

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        return term_to_text(self)


@dataclass(frozen=True)
class Const(Term):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var(Term):
    name: str
    kind: VarKind = VarKind.PROB


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Neg(Term):
    arg: Term


@dataclass(frozen=True)
class Sub(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Div(Term):
    left: Term
    right: Term


def _as_term(value) -> Term:
    if isinstance(value, Term):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    raise TermError(f"cannot coerce {value!r} to a term")


def rename_term(t: Term, mapping: Mapping[str, str]) -> Term:
    if isinstance(t, Const):
        return t
    if isinstance(t, Var):
        new = mapping.get(t.name)
        return Var(new, t.kind) if new else t
    if isinstance(t, Neg):
        return Neg(rename_term(t.arg, mapping))
    ctor = type(t)
    return ctor(rename_term(t.left, mapping), rename_term(t.right, mapping))


def rename_constraint(c: Constraint, mapping: Mapping[str, str]) -> Constraint:
    if isinstance(c, CTrue):
        return c
    if isinstance(c, (Leq, Lt, Eq, Geq, Gt)):
        return type(c)(rename_term(c.left, mapping), rename_term(c.right, mapping))
    if isinstance(c, Not):
        return Not(rename_constraint(c.arg, mapping))
    if isinstance(c, (And, Or)):
        return type(c)(
            rename_constraint(c.left, mapping), rename_constraint(c.right, mapping)
        )
    raise TermError(f"not a constraint: {c!r}")


def term_vars(t: Term) -> set[str]:
    out: set[str] = set()
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, (Add, Mul, Sub, Div)):
            stack.extend((node.left, node.right))
        elif isinstance(node, Neg):
            stack.append(node.arg)
    return out


def evaluate(t: Term, assignment: Mapping[str, Fraction]) -> Fraction:
    """Exact meaning of a term under an assignment.

    Constants denote themselves, + and * are rational addition and
    multiplication; the sugared forms evaluate through their expansions.
    Division by zero (surface Div only) and unbound variables raise.
    """
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        try:
            return Fraction(assignment[t.name])
        except KeyError:
            raise TermError(f"unbound variable {t.name!r}") from None
    if isinstance(t, Add):
        return evaluate(t.left, assignment) + evaluate(t.right, assignment)
    if isinstance(t, Mul):
        return evaluate(t.left, assignment) * evaluate(t.right, assignment)
    if isinstance(t, Neg):
        return -evaluate(t.arg, assignment)
    if isinstance(t, Sub):
        return evaluate(t.left, assignment) - evaluate(t.right, assignment)
    if isinstance(t, Div):
        den = evaluate(t.right, assignment)
        if den == 0:
            raise TermError("division by zero")
        return evaluate(t.left, assignment) / den
    raise TermError(f"not a term: {t!r}")


# --------------------------------------------------------------------------
# Constraint AST


class Constraint:
    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return constraint_to_text(self)


@dataclass(frozen=True)
class CTrue(Constraint):
    pass


TRUE = CTrue()


@dataclass(frozen=True)
class Leq(Constraint):
    left: Term
    right: Term


@dataclass(frozen=True)
class Lt(Constraint):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Constraint):
    arg: Constraint


@dataclass(frozen=True)
class And(Constraint):
    left: Constraint
    right: Constraint


# Derived comparison and boolean forms.  They stay in the tree so that
# defining equations remain syntactically recognizable; desugar() removes
# them before emission to a decision procedure.

@dataclass(frozen=True)
class Eq(Constraint):
    left: Term
    right: Term


@dataclass(frozen=True)
class Geq(Constraint):
    left: Term
    right: Term


@dataclass(frozen=True)
class Gt(Constraint):
    left: Term
    right: Term


@dataclass(frozen=True)
class Or(Constraint):
    left: Constraint
    right: Constraint


def desugar(c: Constraint) -> Constraint:
    """Expand derived operators into {true, <=, <, not, and}."""
    if isinstance(c, (CTrue, Leq, Lt)):
        return c
    if isinstance(c, Not):
        return Not(desugar(c.arg))
    if isinstance(c, And):
        return And(desugar(c.left), desugar(c.right))
    if isinstance(c, Or):
        return Not(And(Not(desugar(c.left)), Not(desugar(c.right))))
    if isinstance(c, Eq):
        return And(Leq(c.left, c.right), Leq(c.right, c.left))
    if isinstance(c, Geq):
        return Leq(c.right, c.left)
    if isinstance(c, Gt):
        return Lt(c.right, c.left)
    raise TermError(f"not a constraint: {c!r}")


def constraint_vars(c: Constraint) -> set[str]:
    if isinstance(c, CTrue):
        return set()
    if isinstance(c, (Leq, Lt, Eq, Geq, Gt)):
        return term_vars(c.left) | term_vars(c.right)
    if isinstance(c, Not):
        return constraint_vars(c.arg)
    if isinstance(c, (And, Or)):
        return constraint_vars(c.left) | constraint_vars(c.right)
    raise TermError(f"not a constraint: {c!r}")


def holds(c: Constraint, assignment: Mapping[str, Fraction]) -> bool:
    """Exact satisfaction of a quantifier-free constraint."""
    if isinstance(c, CTrue):
        return True
    if isinstance(c, Leq):
        return evaluate(c.left, assignment) <= evaluate(c.right, assignment)
    if isinstance(c, Lt):
        return evaluate(c.left, assignment) < evaluate(c.right, assignment)
    if isinstance(c, Eq):
        return evaluate(c.left, assignment) == evaluate(c.right, assignment)
    if isinstance(c, Geq):
        return evaluate(c.left, assignment) >= evaluate(c.right, assignment)
    if isinstance(c, Gt):
        return evaluate(c.left, assignment) > evaluate(c.right, assignment)
    if isinstance(c, Not):
        return not holds(c.arg, assignment)
    if isinstance(c, And):
        return holds(c.left, assignment) and holds(c.right, assignment)
    if isinstance(c, Or):
        return holds(c.left, assignment) or holds(c.right, assignment)
    raise TermError(f"not a constraint: {c!r}")


def violation(c: Constraint, assignment: Mapping[str, Fraction]) -> Fraction:
    """How far an assignment is from satisfying c, as an exact magnitude.

    Zero when c holds (and for strict comparisons that are exactly tight);
    for a violated comparison, the absolute amount by which it misses.
    Negations are pushed onto atoms first so the measure stays comparison
    shaped.
    """
    if isinstance(c, CTrue):
        return Fraction(0)
    if isinstance(c, (Leq, Lt)):
        gap = evaluate(c.left, assignment) - evaluate(c.right, assignment)
        return gap if gap > 0 else Fraction(0)
    if isinstance(c, (Geq, Gt)):
        gap = evaluate(c.right, assignment) - evaluate(c.left, assignment)
        return gap if gap > 0 else Fraction(0)
    if isinstance(c, Eq):
        return abs(evaluate(c.left, assignment) - evaluate(c.right, assignment))
    if isinstance(c, And):
        return max(violation(c.left, assignment), violation(c.right, assignment))
    if isinstance(c, Or):
        return min(violation(c.left, assignment), violation(c.right, assignment))
    if isinstance(c, Not):
        inner = c.arg
        if isinstance(inner, Not):
            return violation(inner.arg, assignment)
        if isinstance(inner, CTrue):
            return Fraction(1)  # unsatisfiable; any positive magnitude
        if isinstance(inner, Leq):
            return violation(Gt(inner.left, inner.right), assignment)
        if isinstance(inner, Lt):
            return violation(Geq(inner.left, inner.right), assignment)
        if isinstance(inner, Geq):
            return violation(Lt(inner.left, inner.right), assignment)
        if isinstance(inner, Gt):
            return violation(Leq(inner.left, inner.right), assignment)
        if isinstance(inner, Eq):
            # != holds except exactly on the zero set
            gap = evaluate(inner.left, assignment) - evaluate(inner.right, assignment)
            return Fraction(0) if gap != 0 else Fraction(1, 10**9)
        if isinstance(inner, And):
            return violation(Or(Not(inner.left), Not(inner.right)), assignment)
        if isinstance(inner, Or):
            return violation(And(Not(inner.left), Not(inner.right)), assignment)
    raise TermError(f"not a constraint: {c!r}")


# --------------------------------------------------------------------------
# Query AST: constraints closed under existential quantification


@dataclass(frozen=True)
class Query:
    __slots__ = ()


@dataclass(frozen=True)
class QAtom(Query):
    constraint: Constraint


@dataclass(frozen=True)
class QExists(Query):
    var: str
    body: Query


@dataclass(frozen=True)
class QNot(Query):
    arg: Query


@dataclass(frozen=True)
class QAnd(Query):
    left: Query
    right: Query


def prenex_parts(q: Query) -> tuple[list[str], Constraint]:
    """Split a prenex-existential query into its bound variables and matrix.

    Raises TermError("unsupported: non-prenex query") for anything else.
    """
    bound: list[str] = []
    while isinstance(q, QExists):
        bound.append(q.var)
        q = q.body
    if not isinstance(q, QAtom):
        raise TermError("unsupported: non-prenex query")
    return bound, q.constraint


# --------------------------------------------------------------------------
# Concrete syntax
#
# constraint := disj ;  disj := conj ('|' conj)* ;  conj := unit ('&' unit)*
# unit := '!' unit | comparison | 'true' | '(' disj ')'
# comparison := sum (('<'|'<='|'='|'>='|'>') sum)
# sum := product (('+'|'-') product)* ; product := unary (('*'|'/') unary)*
# unary := '-' unary | NUMBER | IDENT | '(' sum ')'
# query := ('exists' IDENT ':')* constraint

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d+|\d+|\.\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|[-+*/()<>=!&|:]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            if src[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {src[pos:].strip()[0]!r}", pos)
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("eof", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, kinds: Optional[Mapping[str, VarKind]] = None):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0
        self.kinds = kinds or {}

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, value, at = self.next()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}, found {value or 'end of input'!r}", at)

    def at_op(self, *ops: str) -> bool:
        kind, value, _ = self.peek()
        return kind == "op" and value in ops

    # -- terms

    def parse_sum(self) -> Term:
        t = self.parse_product()
        while self.at_op("+", "-"):
            _, op, _ = self.next()
            rhs = self.parse_product()
            t = Add(t, rhs) if op == "+" else Sub(t, rhs)
        return t

    def parse_product(self) -> Term:
        t = self.parse_unary()
        while self.at_op("*", "/"):
            _, op, _ = self.next()
            rhs = self.parse_unary()
            if op == "*":
                t = Mul(t, rhs)
            elif isinstance(t, Const) and isinstance(rhs, Const) and rhs.value != 0:
                t = Const(t.value / rhs.value)  # a/b literal is a rational literal
            else:
                t = Div(t, rhs)
        return t

    def parse_unary(self) -> Term:
        if self.at_op("-"):
            self.next()
            arg = self.parse_unary()
            if isinstance(arg, Const):
                return Const(-arg.value)
            return Neg(arg)
        kind, value, at = self.next()
        if kind == "num":
            return Const(Fraction(value))  # decimal literals convert exactly
        if kind == "ident":
            if value == "true":
                raise ParseError("'true' is not a term", at)
            return Var(value, self.kinds.get(value, VarKind.PROB))
        if kind == "op" and value == "(":
            t = self.parse_sum()
            self.expect_op(")")
            return t
        raise ParseError(f"expected a term, found {value or 'end of input'!r}", at)

    # -- constraints

    def parse_disj(self) -> Constraint:
        c = self.parse_conj()
        while self.at_op("|"):
            self.next()
            c = Or(c, self.parse_conj())
        return c

    def parse_conj(self) -> Constraint:
        c = self.parse_unit()
        while self.at_op("&"):
            self.next()
            c = And(c, self.parse_unit())
        return c

    def parse_unit(self) -> Constraint:
        if self.at_op("!"):
            self.next()
            return Not(self.parse_unit())
        kind, value, _ = self.peek()
        if kind == "ident" and value == "true":
            self.next()
            return TRUE
        if self.at_op("("):
            # A parenthesis may open a nested constraint or a term; try the
            # constraint reading and fall back on failure.
            save = self.pos
            try:
                self.next()
                c = self.parse_disj()
                self.expect_op(")")
                return c
            except ParseError:
                self.pos = save
        return self.parse_comparison()

    def parse_comparison(self) -> Constraint:
        left = self.parse_sum()
        kind, value, at = self.peek()
        if kind != "op" or value not in ("<", "<=", "=", ">=", ">"):
            raise ParseError("expected a comparison operator", at)
        self.next()
        right = self.parse_sum()
        return {"<": Lt, "<=": Leq, "=": Eq, ">=": Geq, ">": Gt}[value](left, right)

    # -- queries

    def parse_query(self) -> Query:
        kind, value, _ = self.peek()
        if kind == "ident" and value == "exists":
            self.next()
            vkind, vname, vat = self.next()
            if vkind != "ident":
                raise ParseError("expected a variable after 'exists'", vat)
            self.expect_op(":")
            return QExists(vname, self.parse_query())
        return QAtom(self.parse_disj())

    def finish(self, node):
        kind, value, at = self.peek()
        if kind != "eof":
            raise ParseError(f"trailing input {value!r}", at)
        return node


def parse_term(src: str, kinds: Optional[Mapping[str, VarKind]] = None) -> Term:
    p = _Parser(src, kinds)
    return p.finish(p.parse_sum())


def parse_constraint(src: str, kinds: Optional[Mapping[str, VarKind]] = None) -> Constraint:
    p = _Parser(src, kinds)
    return p.finish(p.parse_disj())


def parse_query(src: str, kinds: Optional[Mapping[str, VarKind]] = None) -> Query:
    p = _Parser(src, kinds)
    return p.finish(p.parse_query())


# --------------------------------------------------------------------------
# Printing.  parse_term(term_to_text(t)) reproduces t node for node, so the
# printer guards the few spots where the grammar would re-associate.

def _frac_text(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    # prefer the decimal spelling when it is exact and short
    num, den = v.numerator, v.denominator
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d == 1 and max(twos, fives) <= 12:
        digits = max(twos, fives)
        scaled = abs(num) * 10**digits // den
        text = f"{scaled:0{digits + 1}d}"
        text = f"{text[:-digits]}.{text[-digits:]}"
        return f"-{text}" if num < 0 else text
    return f"{num}/{den}"


_TERM_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Const: 4, Var: 4}
_TERM_OPS = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}


def _effective_prec(node: Term) -> int:
    # fraction and negative literals print as small expressions, not atoms
    if isinstance(node, Const):
        if node.value.denominator != 1 and "/" in _frac_text(node.value):
            return _TERM_PREC[Div]
        if node.value < 0:
            return _TERM_PREC[Div]
        return _TERM_PREC[Const]
    return _TERM_PREC[type(node)]


def term_to_text(t: Term) -> str:
    def render(node: Term) -> str:
        if isinstance(node, Const):
            return _frac_text(node.value)
        if isinstance(node, Var):
            return node.name
        if isinstance(node, Neg):
            inner = render(node.arg)
            if _effective_prec(node.arg) < _TERM_PREC[Neg]:
                inner = f"({inner})"
            return f"-{inner}"
        prec = _TERM_PREC[type(node)]
        lhs = render(node.left)
        if _effective_prec(node.left) < prec:
            lhs = f"({lhs})"
        rhs = render(node.right)
        # right-nested operations of the same level re-associate when read
        # back, so they always take parentheses; - and / never chain right
        if _effective_prec(node.right) <= prec:
            rhs = f"({rhs})"
        elif isinstance(node.right, Const) and node.right.value < 0:
            rhs = f"({rhs})"
        return f"{lhs}{_TERM_OPS[type(node)]}{rhs}"

    return render(t)


def parser_image(t: Term) -> Term:
    """Normalize a term to the shape the parser itself produces.

    The parser folds negated and quotient literals into rational constants;
    terms built programmatically may contain Neg(Const(c)) or
    Div(Const(a), Const(b)), which print to spellings that read back folded.
    """
    if isinstance(t, (Const, Var)):
        return t
    if isinstance(t, Neg):
        arg = parser_image(t.arg)
        if isinstance(arg, Const):
            return Const(-arg.value)
        return Neg(arg)
    if isinstance(t, Div):
        left, right = parser_image(t.left), parser_image(t.right)
        if isinstance(left, Const) and isinstance(right, Const) and right.value != 0:
            return Const(left.value / right.value)
        return Div(left, right)
    ctor = type(t)
    return ctor(parser_image(t.left), parser_image(t.right))


def constraint_to_text(c: Constraint) -> str:
    if isinstance(c, CTrue):
        return "true"
    ops = {Leq: "<=", Lt: "<", Eq: "=", Geq: ">=", Gt: ">"}
    if type(c) in ops:
        return f"{term_to_text(c.left)} {ops[type(c)]} {term_to_text(c.right)}"
    if isinstance(c, Not):
        return f"!({constraint_to_text(c.arg)})"
    if isinstance(c, And):
        return f"({constraint_to_text(c.left)}) & ({constraint_to_text(c.right)})"
    if isinstance(c, Or):
        return f"({constraint_to_text(c.left)}) | ({constraint_to_text(c.right)})"
    raise TermError(f"not a constraint: {c!r}")
