"""Lie determinants: exact determinant of the prolonged coefficient matrix
of an m-dimensional algebra at order m-2, and extraction of the singular
invariant equations from its factors.

The determinant is computed by fraction-free Bareiss elimination over the
polynomial ring Q[atoms] (exact multivariate division under graded-lex), with
a division-free Laplace expansion as fallback when an entry is not
polynomial.  Factor extraction covers rational content, atom monomials and
perfect powers of a multi-term polynomial, which suffices for the catalog.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .expr import (
    Atom,
    Expr,
    ExprError,
    ONE,
    ZERO,
    diff,
    is_polynomial,
    jet,
    max_jet_order,
)
from .invariance import OdeEquation, coefficient_matrix
from .jet import VectorField


@dataclass(frozen=True)
class SingularEquation:
    """One vanishing factor of a Lie determinant.

    kind is "ode" when the factor is solved for its top jet, "parameter"
    when the factor involves no jet coordinates (a degeneracy condition on
    the family parameters), and "implicit" otherwise.
    """

    factor: Expr
    multiplicity: int
    kind: str
    order: Optional[int] = None
    equation: Optional[OdeEquation] = None


@dataclass(frozen=True)
class LieDeterminantResult:
    algebra_label: str
    matrix_order: int
    determinant: Expr
    factors: tuple
    constant_prefactor: Expr
    non_polynomial: bool = False

    def reassembled(self) -> Expr:
        out = self.constant_prefactor
        for f, mult in self.factors:
            out = out * f.pow(mult)
        return out


def lie_determinant(fields: Sequence[VectorField], label: str = "") -> LieDeterminantResult:
    m = len(fields)
    if m < 2:
        raise ValueError("a Lie determinant needs at least two generators")
    order = m - 2
    matrix = coefficient_matrix(fields, order)
    if all(is_polynomial(e) for row in matrix for e in row):
        det = _bareiss_determinant(matrix)
        prefactor, factors = factor_polynomial(det)
        return LieDeterminantResult(label, order, det, tuple(factors),
                                    Expr.rational(prefactor))
    det = _laplace_determinant(matrix)
    return LieDeterminantResult(label, order, det, (), ONE, non_polynomial=True)


def singular_equations(result: LieDeterminantResult) -> List[SingularEquation]:
    """Classify each non-constant factor; solve for the top jet when the
    factor is linear in it, otherwise keep it implicit."""
    out = []
    for f, mult in result.factors:
        top = max_jet_order(f)
        if top is None or top == 0:
            kind = "parameter" if top is None else "implicit"
            out.append(SingularEquation(f, mult, kind, order=top))
            continue
        a = diff(f, jet(top))
        if a.is_zero_expr() or not diff(a, jet(top)).is_zero_expr():
            out.append(SingularEquation(f, mult, "implicit", order=top))
            continue
        b = f - a * jet(top).as_expr()
        rhs = -b / a
        out.append(SingularEquation(f, mult, "ode", order=top,
                                    equation=OdeEquation(top, rhs)))
    return out


# -- dense polynomial helpers -------------------------------------------------

def _poly_vars(exprs) -> list:
    atoms = set()
    for e in exprs:
        for mono, _ in e._terms:
            for b, _ex in mono:
                atoms.add(b)
    return sorted(atoms, key=lambda a: a._key)


def _dense(e: Expr, vars: list) -> dict:
    index = {a: i for i, a in enumerate(vars)}
    out = {}
    for mono, coeff in e._terms:
        exps = [0] * len(vars)
        for b, ex in mono:
            exps[index[b]] = ex.numerator
        out[tuple(exps)] = coeff
    return out


def _from_dense(d: dict, vars: list) -> Expr:
    total = ZERO
    for exps, coeff in d.items():
        items = {a: Fraction(k) for a, k in zip(vars, exps) if k}
        from .expr import _make_term  # internal but stable

        total = total + _make_term(coeff, items)
    return total


def _grlex_key(exps: tuple):
    return (sum(exps), exps)


def _dense_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            cur = out.get(key)
            c = ca * cb
            if cur is None:
                out[key] = c
            else:
                cur = cur + c
                if cur:
                    out[key] = cur
                else:
                    del out[key]
    return out


def _dense_sub(a: dict, b: dict) -> dict:
    out = dict(a)
    for e, c in b.items():
        cur = out.get(e)
        if cur is None:
            out[e] = -c
        else:
            cur = cur - c
            if cur:
                out[e] = cur
            else:
                del out[e]
    return out


def _dense_div_exact(p: dict, q: dict) -> dict:
    """Exact division p / q in Q[vars]; raises ExprError if not exact."""
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    if not p:
        return {}
    rem = dict(p)
    quot: dict = {}
    lq = max(q, key=_grlex_key)
    cq = q[lq]
    while rem:
        lr = max(rem, key=_grlex_key)
        exps = tuple(a - b for a, b in zip(lr, lq))
        if any(x < 0 for x in exps):
            raise ExprError("inexact polynomial division")
        c = rem[lr] / cq
        quot[exps] = quot.get(exps, Fraction(0)) + c
        rem = _dense_sub(rem, _dense_mul({exps: c}, q))
    return quot


def _bareiss_determinant(matrix: list) -> Expr:
    m = len(matrix)
    vars = _poly_vars(e for row in matrix for e in row)
    a = [[_dense(e, vars) for e in row] for row in matrix]
    sign = 1
    prev: dict = {tuple([0] * len(vars)): Fraction(1)}
    for k in range(m - 1):
        if not a[k][k]:
            pivot_row = next((i for i in range(k + 1, m) if a[i][k]), None)
            if pivot_row is None:
                if all(not a[i][k] for i in range(k, m)):
                    return ZERO
                pivot_row = k  # unreachable; defensive
            a[k], a[pivot_row] = a[pivot_row], a[k]
            sign = -sign
        for i in range(k + 1, m):
            for j in range(k + 1, m):
                num = _dense_sub(_dense_mul(a[i][j], a[k][k]),
                                 _dense_mul(a[i][k], a[k][j]))
                a[i][j] = _dense_div_exact(num, prev)
            a[i][k] = {}
        prev = a[k][k]
    det = a[m - 1][m - 1]
    if sign < 0:
        det = {e: -c for e, c in det.items()}
    return _from_dense(det, vars)


def _laplace_determinant(matrix: list) -> Expr:
    m = len(matrix)
    memo: dict = {}

    def minor(k: int, cols: tuple) -> Expr:
        if k == m:
            return ONE
        hit = memo.get((k, cols))
        if hit is not None:
            return hit
        total = ZERO
        for idx, j in enumerate(cols):
            entry = matrix[k][j]
            if entry.is_zero_expr():
                continue
            sub = minor(k + 1, cols[:idx] + cols[idx + 1:])
            piece = entry * sub
            total = total + piece if idx % 2 == 0 else total - piece
        memo[(k, cols)] = total
        return total

    return minor(0, tuple(range(m)))


# -- factor extraction --------------------------------------------------------

def factor_polynomial(e: Expr) -> Tuple[Fraction, list]:
    """(prefactor, [(factor, multiplicity), ...]) with factors content-free.

    Handles rational content, atom-monomial factors, and a remaining perfect
    power of a multi-term polynomial.  The remaining factor is returned with
    multiplicity 1 when no power structure is found.
    """
    if e.is_zero_expr():
        return Fraction(0), []
    vars = _poly_vars([e])
    dense = _dense(e, vars)
    lead = max(dense, key=_grlex_key)
    # rational content, signed so the leading coefficient is positive
    nums = [c.numerator for c in dense.values()]
    dens = [c.denominator for c in dense.values()]
    import math

    g = 0
    for n in nums:
        g = math.gcd(g, abs(n))
    l = 1
    for d in dens:
        l = l * d // math.gcd(l, d)
    content = Fraction(g, l)
    if dense[lead] < 0:
        content = -content
    dense = {ex: c / content for ex, c in dense.items()}
    factors: list = []
    # atom-monomial part
    mins = [min(ex[i] for ex in dense) for i in range(len(vars))]
    if any(mins):
        dense = {tuple(x - mn for x, mn in zip(ex, mins)): c for ex, c in dense.items()}
        for a, mn in zip(vars, mins):
            if mn:
                factors.append((a.as_expr() if isinstance(a, Atom) else a, mn))
    rest_expr = _from_dense(dense, vars)
    if rest_expr == ONE:
        return content, factors
    total_deg = max(sum(ex) for ex in dense)
    found = False
    for k in range(min(total_deg, 8), 1, -1):
        if total_deg % k:
            continue
        root = _dense_root(dense, k, vars)
        if root is not None:
            factors.append((_from_dense(root, vars), k))
            found = True
            break
    if not found:
        split = _split_quadratic_square(rest_expr)
        if split is not None:
            extra, parts = split
            content *= extra
            factors.extend(parts)
        else:
            factors.append((rest_expr, 1))
    factors.sort(key=lambda t: t[0]._key)
    return content, factors


def _split_quadratic_square(f: Expr):
    """Detect f = cofactor * (linear in its top jet)^2 via the discriminant.

    Writing f = a*v^2 + b*v + c in the top jet v, a repeated linear factor
    forces b^2 - 4*a*c = 0; the factor is then the primitive-in-v part of
    2*a*v + b, with the common v-free cofactor of (2a, b) removed by
    matching their recognized factorizations.
    """
    top = max_jet_order(f)
    if top is None or top < 1:
        return None
    v = jet(top)
    a2 = diff(diff(f, v), v)  # = 2a
    if a2.is_zero_expr():
        return None
    b = diff(f, v) - a2 * v.as_expr()
    c = f - a2 * v.as_expr() ** 2 * Expr.rational(Fraction(1, 2)) - b * v.as_expr()
    disc = b * b - 2 * a2 * c
    if not disc.is_zero_expr():
        return None
    common = _common_recognized_factor(a2, b) if not b.is_zero_expr() else None
    lin = a2 * v.as_expr() + b
    if common is not None and common != ONE:
        try:
            vars = _poly_vars([lin, common])
            lin = _from_dense(
                _dense_div_exact(_dense(lin, vars), _dense(common, vars)), vars)
        except (ExprError, ZeroDivisionError):
            return None
    _lin_content, lin_parts = factor_polynomial(lin)
    root = ONE
    for g, m in lin_parts:
        root = root * g.pow(m)
    try:
        vars = _poly_vars([f, root])
        quot = _dense_div_exact(_dense(f, vars), _dense_mul(
            _dense(root, vars), _dense(root, vars)))
    except (ExprError, ZeroDivisionError):
        return None
    cof_expr = _from_dense(quot, vars)
    out = [(root, 2)]
    extra = Fraction(1)
    if cof_expr != ONE:
        cof_content, cof_factors = factor_polynomial(cof_expr)
        extra = cof_content
        out.extend(cof_factors)
    return extra, out


def _common_recognized_factor(a: Expr, b: Expr):
    """Product of the common recognized factors of two polynomials (content
    ignored); None when either side resists factorization."""
    fa = dict()
    for g, m in factor_polynomial(a)[1]:
        fa[g] = fa.get(g, 0) + m
    out = ONE
    for g, m in factor_polynomial(b)[1]:
        have = fa.get(g, 0)
        k = min(have, m)
        if k:
            out = out * g.pow(k)
    return out


def _dense_root(p: dict, k: int, vars: list):
    """Polynomial k-th root of p, or None.  p has positive leading coeff."""
    lead = max(p, key=_grlex_key)
    if any(x % k for x in lead):
        return None
    c0 = _fraction_root(p[lead], k)
    if c0 is None:
        return None
    b0_exp = tuple(x // k for x in lead)
    root = {b0_exp: c0}
    # divisor for the next-term update: k * b0^(k-1)
    div = {tuple(x * (k - 1) for x in b0_exp): k * c0 ** (k - 1)}
    for _ in range(400):
        rem = _dense_sub(p, _dense_pow(root, k))
        if not rem:
            return root
        lr = max(rem, key=_grlex_key)
        exps = tuple(a - b for a, b in zip(lr, next(iter(div))))
        if any(x < 0 for x in exps):
            return None
        c = rem[lr] / next(iter(div.values()))
        if _grlex_key(exps) >= _grlex_key(max(root, key=_grlex_key)):
            return None
        root[exps] = root.get(exps, Fraction(0)) + c
    return None


def _dense_pow(p: dict, k: int) -> dict:
    out = {tuple([0] * len(next(iter(p)))): Fraction(1)} if p else {}
    base = p
    n = k
    while n:
        if n & 1:
            out = _dense_mul(out, base)
        n >>= 1
        if n:
            base = _dense_mul(base, base)
    return out


def _fraction_root(c: Fraction, k: int):
    if c < 0:
        return None
    num = _iroot(c.numerator, k)
    den = _iroot(c.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _iroot(n: int, k: int):
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None
