"""Canonical sparse multivariate polynomials over exact rationals.

The canonical carrier for symbolic probability expressions: a polynomial
is a map from exponent vectors (against a sorted tuple of variable names)
to nonzero rational coefficients.  Division is eliminated by normalizing
any term into a numerator/denominator pair of such polynomials.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .terms import (
    Add, Const, Div, Mul, Neg, Sub, Term, TermError, Var, VarKind,
)

_ZERO = Fraction(0)
_ONE = Fraction(1)


class Polynomial:
    """Immutable canonical form: sorted minimal variable tuple, no zero
    coefficients, fixed-arity exponent vectors."""

    __slots__ = ("vars", "coeffs")

    def __init__(self, vars: Iterable[str] = (), coeffs: Optional[Mapping[tuple[int, ...], Fraction]] = None):
        vs = tuple(vars)
        cs = {e: Fraction(c) for e, c in (coeffs or {}).items() if c != 0}
        if any(len(e) != len(vs) for e in cs):
            raise TermError("exponent vector arity does not match variable tuple")
        # prune variables that no surviving monomial uses
        if vs:
            used = [any(e[i] for e in cs) for i in range(len(vs))]
            if not all(used):
                keep = [i for i, u in enumerate(used) if u]
                vs = tuple(vs[i] for i in keep)
                cs = {tuple(e[i] for i in keep): c for e, c in cs.items()}
        object.__setattr__(self, "vars", vs)
        object.__setattr__(self, "coeffs", cs)

    def __setattr__(self, *_):
        raise AttributeError("Polynomial is immutable")

    # -- constructors

    @staticmethod
    def const(value) -> "Polynomial":
        value = Fraction(value)
        if value == 0:
            return Polynomial()
        return Polynomial((), {(): value})

    @staticmethod
    def variable(name: str) -> "Polynomial":
        return Polynomial((name,), {(1,): _ONE})

    # -- basic queries

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_const(self) -> bool:
        return not self.vars

    def const_value(self) -> Fraction:
        if self.vars:
            raise TermError("polynomial is not constant")
        return self.coeffs.get((), _ZERO)

    def total_degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def degree_in(self, var: str) -> int:
        if var not in self.vars:
            return 0
        i = self.vars.index(var)
        return max((e[i] for e in self.coeffs), default=0)

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.vars == other.vars and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.vars, tuple(sorted(self.coeffs.items()))))

    def __repr__(self):
        from .terms import term_to_text
        return f"Polynomial({term_to_text(self.to_term())})"

    # -- alignment of two polynomials onto a merged variable tuple

    def _embed(self, vs: tuple[str, ...]) -> dict[tuple[int, ...], Fraction]:
        if vs == self.vars:
            return dict(self.coeffs)
        idx = [vs.index(v) for v in self.vars]
        out: dict[tuple[int, ...], Fraction] = {}
        for e, c in self.coeffs.items():
            full = [0] * len(vs)
            for i, exp in zip(idx, e):
                full[i] = exp
            out[tuple(full)] = c
        return out

    @staticmethod
    def _merged_vars(a: "Polynomial", b: "Polynomial") -> tuple[str, ...]:
        if a.vars == b.vars:
            return a.vars
        return tuple(sorted(set(a.vars) | set(b.vars)))

    # -- arithmetic

    def __add__(self, other):
        other = _coerce(other)
        vs = self._merged_vars(self, other)
        out = self._embed(vs)
        for e, c in other._embed(vs).items():
            s = out.get(e, _ZERO) + c
            if s == 0:
                out.pop(e, None)
            else:
                out[e] = s
        return Polynomial(vs, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.vars, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        vs = self._merged_vars(self, other)
        a = self._embed(vs)
        b = other._embed(vs)
        out: dict[tuple[int, ...], Fraction] = {}
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                s = out.get(e, _ZERO) + ca * cb
                if s == 0:
                    out.pop(e, None)
                else:
                    out[e] = s
        return Polynomial(vs, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise TermError("negative polynomial power")
        result = Polynomial.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def scale(self, factor) -> "Polynomial":
        factor = Fraction(factor)
        if factor == 0:
            return Polynomial()
        return Polynomial(self.vars, {e: c * factor for e, c in self.coeffs.items()})

    def evaluate(self, assignment: Mapping[str, Fraction]) -> Fraction:
        try:
            values = [Fraction(assignment[v]) for v in self.vars]
        except KeyError as exc:
            raise TermError(f"unbound variable {exc.args[0]!r}") from None
        total = _ZERO
        for e, c in self.coeffs.items():
            term = c
            for val, exp in zip(values, e):
                if exp:
                    term *= val**exp
            total += term
        return total

    def split_by_degree(self, var: str) -> dict[int, "Polynomial"]:
        """Rewrite as sum_d coeff_d(rest) * var**d; keys are the degrees d."""
        if var not in self.vars:
            return {0: self}
        i = self.vars.index(var)
        rest = self.vars[:i] + self.vars[i + 1:]
        buckets: dict[int, dict[tuple[int, ...], Fraction]] = {}
        for e, c in self.coeffs.items():
            d = e[i]
            re = e[:i] + e[i + 1:]
            buckets.setdefault(d, {})[re] = c
        return {d: Polynomial(rest, cs) for d, cs in buckets.items()}

    def leading(self) -> tuple[tuple[int, ...], Fraction]:
        """Leading monomial under graded lexicographic order."""
        if not self.coeffs:
            return (), _ZERO
        key = max(self.coeffs, key=lambda e: (sum(e), e))
        return key, self.coeffs[key]

    def content(self) -> Fraction:
        """Positive rational content: gcd of numerators over lcm of
        denominators, signed by the leading coefficient."""
        if not self.coeffs:
            return _ONE
        from math import gcd
        num_gcd = 0
        den_lcm = 1
        for c in self.coeffs.values():
            num_gcd = gcd(num_gcd, abs(c.numerator))
            den_lcm = den_lcm * c.denominator // gcd(den_lcm, c.denominator)
        magnitude = Fraction(num_gcd, den_lcm)
        return -magnitude if self.leading()[1] < 0 else magnitude

    def monomials(self):
        """Monomials in descending graded-lex order, as (exponents, coeff)."""
        return sorted(self.coeffs.items(), key=lambda ec: (sum(ec[0]), ec[0]), reverse=True)

    def to_term(self) -> Term:
        if not self.coeffs:
            return Const(_ZERO)
        parts: list[Term] = []
        for e, c in self.monomials():
            factors: list[Term] = []
            for v, exp in zip(self.vars, e):
                factors.extend(Var(v) for _ in range(exp))
            if not factors:
                parts.append(Const(c))
                continue
            # left-nested product so the rendering reads c*v1*v2*...
            term: Term = Const(c) if c != 1 else factors.pop(0)
            for f in factors:
                term = Mul(term, f)
            parts.append(term)
        total = parts[0]
        for p in parts[1:]:
            total = Add(total, p)
        return total


def _coerce(value) -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    if isinstance(value, (int, Fraction)):
        return Polynomial.const(value)
    raise TermError(f"cannot coerce {value!r} to a polynomial")


class RationalFn:
    """num/den in canonical form: den nonzero; constant denominators fold
    into the numerator; otherwise den is monic under graded-lex order."""

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Polynomial):
        if den.is_zero():
            raise TermError("zero denominator")
        if den.is_const():
            num = num.scale(1 / den.const_value())
            den = Polynomial.const(1)
        else:
            lead = den.leading()[1]
            if lead != 1:
                num = num.scale(1 / lead)
                den = den.scale(1 / lead)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, *_):
        raise AttributeError("RationalFn is immutable")

    def is_polynomial(self) -> bool:
        return self.den.is_const()

    def __eq__(self, other):
        if not isinstance(other, RationalFn):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RationalFn({self.num!r}, {self.den!r})"

    def __add__(self, other):
        other = _coerce_rf(other)
        if self.den == other.den:
            return RationalFn(self.num + other.num, self.den)
        return RationalFn(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other):
        other = _coerce_rf(other)
        return self + RationalFn(-other.num, other.den)

    def __neg__(self):
        return RationalFn(-self.num, self.den)

    def __mul__(self, other):
        other = _coerce_rf(other)
        return RationalFn(self.num * other.num, self.den * other.den)

    def __truediv__(self, other):
        other = _coerce_rf(other)
        if other.num.is_zero():
            raise TermError("division by the zero function")
        return RationalFn(self.num * other.den, self.den * other.num)

    def evaluate(self, assignment: Mapping[str, Fraction]) -> Fraction:
        den = self.den.evaluate(assignment)
        if den == 0:
            raise TermError("division by zero")
        return self.num.evaluate(assignment) / den

    def to_term(self) -> Term:
        if self.is_polynomial():
            return self.num.to_term()
        return Div(self.num.to_term(), self.den.to_term())


def _coerce_rf(value) -> RationalFn:
    if isinstance(value, RationalFn):
        return value
    if isinstance(value, Polynomial):
        return RationalFn(value, Polynomial.const(1))
    if isinstance(value, (int, Fraction)):
        return RationalFn(Polynomial.const(value), Polynomial.const(1))
    raise TermError(f"cannot coerce {value!r} to a rational function")


def to_rational_fn(t: Term) -> RationalFn:
    """Division-elimination: a num/den pair extensionally equal to t
    wherever t is defined, with both parts in canonical polynomial form."""
    if isinstance(t, Const):
        return _coerce_rf(t.value)
    if isinstance(t, Var):
        return _coerce_rf(Polynomial.variable(t.name))
    if isinstance(t, Add):
        return to_rational_fn(t.left) + to_rational_fn(t.right)
    if isinstance(t, Sub):
        return to_rational_fn(t.left) - to_rational_fn(t.right)
    if isinstance(t, Mul):
        return to_rational_fn(t.left) * to_rational_fn(t.right)
    if isinstance(t, Neg):
        return -to_rational_fn(t.arg)
    if isinstance(t, Div):
        return to_rational_fn(t.left) / to_rational_fn(t.right)
    raise TermError(f"not a term: {t!r}")


def to_polynomial(t: Term) -> Polynomial:
    """Like to_rational_fn but requires the result to be a polynomial
    (denominators, if any, must normalize away)."""
    rf = to_rational_fn(t)
    if not rf.is_polynomial():
        raise TermError("term has a non-constant denominator")
    return rf.num


def simplify(t: Term) -> Term:
    """Round-trip through the normal form; the result is extensionally
    equal to t with polynomial support no larger than t's."""
    return to_rational_fn(t).to_term()
