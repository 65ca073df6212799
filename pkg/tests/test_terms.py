from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbn.terms import (
    TRUE, Add, And, Const, Div, Eq, Geq, Gt, Leq, Lt, Mul, Neg, Not, Or,
    ParseError, QAtom, QExists, Sub, TermError, Var, VarKind, constraint_to_text,
    desugar, evaluate, holds, parse_constraint, parse_query, parse_term,
    parser_image, prenex_parts, term_to_text, violation,
)

F = Fraction


def c(v):
    return Const(F(v))


def test_parse_simple_product():
    assert parse_term("0.5*x") == Mul(c("1/2"), Var("x"))


def test_parse_table_entry():
    assert parse_term("1-0.5*x") == Sub(c(1), Mul(c("1/2"), Var("x")))


def test_parse_marginal_comparison():
    kinds = {"mp_H": VarKind.MARGINAL}
    got = parse_constraint("mp_H < 0.3", kinds)
    assert got == Lt(Var("mp_H", VarKind.MARGINAL), c("3/10"))


def test_decimal_literals_are_exact():
    assert parse_term("0.05") == c("1/20")
    assert parse_term("0.3333") == c("3333/10000")


def test_quotient_literals_fold():
    assert parse_term("1/20") == c("1/20")
    assert parse_term("-3/4") == c("-3/4")


def test_parse_operator_precedence():
    t = parse_term("1 + 2*x - 3")
    assert t == Sub(Add(c(1), Mul(c(2), Var("x"))), c(3))


def test_parse_errors_carry_position():
    with pytest.raises(ParseError):
        parse_term("1 + ")
    with pytest.raises(ParseError):
        parse_term("x $ y")
    with pytest.raises(ParseError):
        parse_constraint("x + 1")  # a bare term is not a constraint


def test_parse_constraint_booleans():
    got = parse_constraint("!(x < 1) & (y <= 2 | true)")
    assert got == And(Not(Lt(Var("x"), c(1))), Or(Leq(Var("y"), c(2)), TRUE))


def test_parse_parenthesized_term_comparison():
    assert parse_constraint("(x + 1) < 2") == Lt(Add(Var("x"), c(1)), c(2))


def test_parse_query_prefix():
    q = parse_query("exists mp_H: mp_H < 0.3")
    assert isinstance(q, QExists) and q.var == "mp_H"
    bound, matrix = prenex_parts(q)
    assert bound == ["mp_H"]
    assert isinstance(matrix, Lt)


def test_non_prenex_rejected():
    from cbn.terms import QNot
    with pytest.raises(TermError, match="non-prenex"):
        prenex_parts(QNot(QAtom(TRUE)))


def test_evaluate_constants_denote_themselves():
    assert evaluate(c("22/7"), {}) == F("22/7")


def test_evaluate_structural():
    t = parse_term("0.5*x + (1-0.5*x)")
    assert evaluate(t, {"x": F("1/4")}) == 1
    assert evaluate(parse_term("x*0"), {"x": F(5)}) == 0


def test_evaluate_errors():
    with pytest.raises(TermError, match="unbound"):
        evaluate(Var("z"), {})
    with pytest.raises(TermError, match="division by zero"):
        evaluate(Div(c(1), Var("x")), {"x": F(0)})


def test_desugar_produces_primitives():
    d = desugar(parse_constraint("x = 1 | y > 2"))
    allowed = (Leq, Lt, Not, And)

    def walk(node):
        assert isinstance(node, allowed), node
        if isinstance(node, Not):
            walk(node.arg)
        elif isinstance(node, And):
            walk(node.left)
            walk(node.right)

    walk(d)


def test_desugar_preserves_meaning():
    src = "!(x = 1) & (x >= 0.5 | x > 2)"
    raw = parse_constraint(src)
    sugar_free = desugar(raw)
    for v in (F(0), F("1/2"), F(1), F(3)):
        assert holds(raw, {"x": v}) == holds(sugar_free, {"x": v})


def test_violation_measures_gap():
    a = parse_constraint("x <= 1")
    assert violation(a, {"x": F(3)}) == 2
    assert violation(a, {"x": F(1)}) == 0
    b = parse_constraint("x = 1 & y < 0")
    assert violation(b, {"x": F("3/2"), "y": F(-1)}) == F("1/2")


# -- printing round-trips ---------------------------------------------------

_names = st.sampled_from(["x", "y", "z", "mp_H"])
_consts = st.fractions(
    min_value=-4, max_value=4, max_denominator=50
).map(lambda f: Const(f))


def _terms(depth):
    if depth == 0:
        return st.one_of(_consts, _names.map(Var))
    sub = _terms(depth - 1)
    return st.one_of(
        _consts,
        _names.map(Var),
        st.tuples(sub, sub).map(lambda ab: Add(*ab)),
        st.tuples(sub, sub).map(lambda ab: Mul(*ab)),
        st.tuples(sub, sub).map(lambda ab: Sub(*ab)),
        st.tuples(sub, sub).map(lambda ab: Div(*ab)),
        sub.map(Neg),
    )


@settings(max_examples=200)
@given(_terms(3))
def test_parser_print_round_trip(t):
    assert parse_term(term_to_text(t)) == parser_image(t)


@settings(max_examples=100)
@given(_terms(2))
def test_constraint_print_round_trip(t):
    for ctor in (Leq, Lt, Eq, Geq, Gt):
        con = ctor(t, Const(F(1)))
        again = parse_constraint(constraint_to_text(con))
        assert again == ctor(parser_image(t), Const(F(1)))
