"""Lie determinants: exact values, factor extraction, singular equations."""

from fractions import Fraction as F

import pytest

from liesym import expr as E
from liesym.invariance import coefficient_matrix, rank_at_point
from liesym.jet import VectorField
from liesym.liedet import factor_polynomial, lie_determinant, singular_equations
from liesym.numeric import ProbeConfig
from liesym.parse import Context, parse_expression

X = E.indep().as_expr()
Y = E.dep().as_expr()
PR = ProbeConfig(points=8, digits=50, seed=3)
DX = VectorField(E.ONE, E.ZERO)
DY = VectorField(E.ZERO, E.ONE)


def J(k):
    return E.jet(k).as_expr()


def chain(*powers):
    return [VectorField(E.ZERO, X ** k) for k in powers]


def test_two_translations_unit_determinant():
    res = lie_determinant([DX, DY])
    assert res.determinant == E.ONE


def test_five_dim_unimodular_determinant():
    gens = [DX, DY, VectorField(X, -Y), VectorField(Y, E.ZERO), VectorField(E.ZERO, X)]
    res = lie_determinant(gens, "(5,5)")
    assert res.determinant == 9 * J(2) ** 3
    assert res.constant_prefactor.as_rational() == 9
    assert [(f, m) for f, m in res.factors] == [(J(2), 3)]
    eqs = singular_equations(res)
    assert len(eqs) == 1 and eqs[0].equation.order == 2
    assert eqs[0].equation.rhs.is_zero_expr()


def test_scaling_family_determinant_symbolic_weight():
    al = E.param("alpha").as_expr()
    gens = [DX, DY, VectorField(X, al * Y)] + chain(1, 2, 3)
    res = lie_determinant(gens)
    want = 12 * (al - 4) * J(4)
    assert (res.determinant - want).is_zero_expr() or \
        (res.determinant + want).is_zero_expr()
    # the weight condition shows up as a parameter factor
    kinds = {s.kind for s in singular_equations(res)}
    assert "parameter" in kinds and any(
        s.equation is not None and s.equation.order == 4
        for s in singular_equations(res))


def test_inhomogeneous_scaling_constant_determinant():
    # with the weight pinned to the chain length the determinant collapses
    gens = [DX, DY] + chain(1, 2) + \
        [VectorField(X, 3 * Y + X ** 3)]
    res = lie_determinant(gens)
    assert res.determinant.is_rational_const()
    assert abs(res.determinant.as_rational()) == 12
    assert singular_equations(res) == []


def test_two_scalings_two_singular_equations():
    gens = [DX, DY, VectorField(X, E.ZERO), VectorField(E.ZERO, Y)] + chain(1, 2, 3)
    res = lie_determinant(gens)
    orders = sorted(s.equation.order for s in singular_equations(res))
    assert orders == [4, 5]
    for s in singular_equations(res):
        assert s.equation.rhs.is_zero_expr()


def test_projective_pair_squared_factor():
    r = F(2)
    gens = [DX, DY, VectorField(2 * X, r * Y), VectorField(X ** 2, r * X * Y)] + chain(1, 2)
    res = lie_determinant(gens)
    want = 32 * J(3) ** 2
    assert (res.determinant - want).is_zero_expr() or \
        (res.determinant + want).is_zero_expr()
    assert any(m == 2 for _f, m in res.factors)


def test_row_swap_flips_sign():
    gens = [DX, DY, VectorField(X, -Y), VectorField(Y, E.ZERO), VectorField(E.ZERO, X)]
    swapped = [gens[1], gens[0]] + gens[2:]
    a = lie_determinant(gens).determinant
    b = lie_determinant(swapped).determinant
    assert (a + b).is_zero_expr()


def test_factor_reassembly_identity():
    gens = [DX, DY, VectorField(X, E.ZERO), VectorField(E.ZERO, Y),
            VectorField(X ** 2, E.ZERO)]
    res = lie_determinant(gens)
    assert (res.reassembled() - res.determinant).is_zero_expr()


def test_non_polynomial_entries_fallback():
    half = VectorField(X ** F(5, 2), E.ZERO)
    res = lie_determinant([DX, DY, half])
    assert res.non_polynomial and res.factors == ()
    assert not res.determinant.is_zero_expr()


def test_composite_square_factor_split():
    ctx = Context()
    f = parse_expression("(1 + y'^2)*((1 + y'^2)*y''' - 3*y'*y''^2)^2", ctx)
    content, factors = factor_polynomial(f)
    mults = sorted(m for _f, m in factors)
    assert mults == [1, 2]


def test_singular_equation_is_invariant_and_rank_drops():
    gens = [DX, DY, VectorField(X, -Y), VectorField(Y, E.ZERO), VectorField(E.ZERO, X)]
    res = lie_determinant(gens)
    eq = singular_equations(res)[0].equation
    from liesym.invariance import check_equation_invariance

    vs = check_equation_invariance(gens, eq, PR)
    assert all(v.is_zero for v in vs)
    matrix = coefficient_matrix(gens, 3)
    on_locus = {E.indep(): F(1), E.dep(): F(1), E.jet(1): F(1),
                E.jet(2): F(0), E.jet(3): F(1, 2)}
    assert rank_at_point(matrix, on_locus) < 5


def test_degenerate_input_rejected():
    with pytest.raises(ValueError):
        lie_determinant([DX])
