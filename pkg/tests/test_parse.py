"""Grammar round trips and parse errors."""

from fractions import Fraction as F

import pytest

from liesym import expr as E
from liesym.expr import format_expr
from liesym.parse import (
    Context,
    ParseError,
    UnknownIdentifierError,
    parse_expression,
    parse_vector_field,
)


def rt(text, ctx=None):
    e = parse_expression(text, ctx)
    again = parse_expression(format_expr(e), ctx)
    assert again == e, f"round trip failed for {text!r}"
    return e


def test_jet_spellings():
    assert rt("y'''") == E.jet(3).as_expr()
    assert parse_expression("y^(2)") == parse_expression("y''")
    assert rt("y^(4)") == E.jet(4).as_expr()
    # parenthesized base means a power of y itself
    assert parse_expression("(y)^(2)") == E.dep().as_expr() ** 2
    assert parse_expression("y^2") == E.dep().as_expr() ** 2


def test_worked_parse_example():
    e = rt("3*y''^2/(2*y')")
    expected = F(3, 2) * E.jet(2).as_expr() ** 2 * E.jet(1).as_expr() ** -1
    assert e == expected


def test_rational_power_and_functions():
    e = rt("sqrt(2*y'*y''' - 3*y''^2)")
    u = 2 * E.jet(1).as_expr() * E.jet(3).as_expr() - 3 * E.jet(2).as_expr() ** 2
    assert e == u ** F(1, 2)
    assert rt("arctan(y')^2") == E.transcendental("arctan", E.jet(1).as_expr()) ** 2
    assert parse_expression("exp(0)") == E.ONE
    assert parse_expression("ln(1)").is_zero_expr()


def test_exponent_grammar():
    ctx = Context(params={"a": F(7), "n": F(5)})
    e = parse_expression("(y^(n-1))^((a-n)/(a-n+1))", ctx)
    assert e == E.jet(4).as_expr() ** F(2, 3)
    assert parse_expression("y''^(-8/3)") == E.jet(2).as_expr() ** F(-8, 3)
    # right-associative exponent chain folds
    assert parse_expression("x^2^3") == E.indep().as_expr() ** 8


def test_precedence():
    x = E.indep().as_expr()
    assert parse_expression("-x^2") == -(x ** 2)
    assert parse_expression("1 - 2*x + x^2") == (1 - x) ** 2


def test_factorials():
    assert parse_expression("fact(4)").as_rational() == 24
    assert parse_expression("factprod(3)").as_rational() == 12


def test_unknown_identifier_offset():
    with pytest.raises(UnknownIdentifierError) as err:
        parse_expression("x*Dx + a*y", Context(params={"a": None}))
    assert err.value.offset == 2
    with pytest.raises(UnknownIdentifierError):
        parse_expression("nope + 1")


def test_jet_order_cap():
    with pytest.raises(ParseError):
        parse_expression("y^(20)")
    ctx = Context(max_jet=20)
    assert parse_expression("y^(20)", ctx) == E.jet(20).as_expr()


def test_syntax_error_reports_offset():
    with pytest.raises(ParseError) as err:
        parse_expression("x + * y")
    assert err.value.offset == 4
    with pytest.raises(ParseError):
        parse_expression("x + (y")


def test_vector_field_parsing():
    ctx = Context(params={"r": None})
    xi, eta = parse_vector_field("x^2*Dx + r*x*y*Dy", ctx)
    x, y = E.indep().as_expr(), E.dep().as_expr()
    assert xi == x ** 2
    assert eta == E.param("r").as_expr() * x * y
    xi, eta = parse_vector_field("Dx")
    assert xi == E.ONE and eta.is_zero_expr()
    with pytest.raises(ParseError):
        parse_vector_field("Dx*Dy")
    with pytest.raises(UnknownIdentifierError):
        parse_expression("Dx + Dy")  # field terminals are not expression atoms


def test_series_expansion():
    def h(args):
        out = E.ZERO
        for a in args:
            out = out + a
        return out

    ctx = Context(params={"n": F(5)}, functions={"H": h})
    e = parse_expression("H(y, series(k, 2, n-1, y^(k)*y'^(-k)))", ctx)
    y1 = E.jet(1).as_expr()
    expected = E.dep().as_expr() + sum(
        (E.jet(k).as_expr() * y1 ** -k for k in (2, 3, 4)), E.ZERO)
    assert e == expected
    # empty range contributes nothing
    ctx2 = Context(params={"n": F(2)}, functions={"H": h})
    assert parse_expression("H(y', series(k, 2, n-1, y^(k)))", ctx2) == y1


def test_print_parse_round_trip_on_catalog_shapes():
    samples = [
        "y^(4)*y''^(-5/3) - 5/3*y'''^2*y''^(-8/3)",
        "x*y''*(1 + y'^2)^(-3/2) - y'*(1 + y'^2)^(-1/2)",
        "exp(-y'''/6)*y^(4)",
        "2^(1/2)*y + 1/3",
    ]
    for s in samples:
        rt(s)
