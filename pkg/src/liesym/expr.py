"""Immutable exact symbolic expressions over jet-space coordinates.

An expression is kept in a flattened sum-of-monomials normal form: a sum of
terms, each an exact rational coefficient times a product of bases raised to
rational exponents.  A base is one of

* an :class:`Atom` -- the independent variable x, the dependent variable y,
  a jet coordinate y^(k), a named parameter, or an opaque transcendental
  call (exp, ln, arctan, sin, cos) keyed by its normalized argument;
* a compound multi-term expression, which only appears under an exponent
  that cannot be expanded (negative integer or non-integer rational);
* a prime integer under a fractional exponent in (0, 1) (e.g. 2^(1/2)).

Positive integer powers of sums are always multiplied out, like terms are
always merged and zero coefficients dropped, so structural equality implies
mathematical equality.  Fractional powers are single valued: numeric probing
only ever evaluates them on positive bases.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping, Union

Rat = Fraction

_TRANSC_FNS = ("exp", "ln", "arctan", "sin", "cos")

_KIND_RANK = {"indep": 0, "dep": 1, "jet": 2, "param": 3, "transc": 4}


class ExprError(Exception):
    pass


class DomainError(ExprError):
    """Raised when an operation leaves the supported real domain."""


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


class Atom:
    """A leaf coordinate of the computation.

    Atoms compare and hash by structural key, so two transcendental atoms are
    equal exactly when their function names and normalized arguments agree.
    """

    __slots__ = ("kind", "order", "name", "fn", "arg", "_key", "_hash")

    def __init__(self, kind: str, order: int = 0, name: str = "",
                 fn: str = "", arg: "Expr | None" = None):
        self.kind = kind
        self.order = order
        self.name = name
        self.fn = fn
        self.arg = arg
        if kind == "jet":
            extra = (order,)
        elif kind == "param":
            extra = (name,)
        elif kind == "transc":
            extra = (fn, arg._key)  # type: ignore[union-attr]
        else:
            extra = ()
        self._key = ("a", _KIND_RANK[kind]) + extra
        self._hash = hash(self._key)

    def __eq__(self, other):
        return isinstance(other, Atom) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Atom({atom_name(self)})"

    def as_expr(self) -> "Expr":
        return _expr_from_terms({((self, _ONE_RAT),): _ONE_RAT})


_ATOM_CACHE: dict = {}


def indep() -> Atom:
    return _cached_atom(("indep",), lambda: Atom("indep"))


def dep() -> Atom:
    return _cached_atom(("dep",), lambda: Atom("dep"))


def jet(k: int) -> Atom:
    if k < 1:
        raise ValueError("jet order must be >= 1; use dep() for order 0")
    return _cached_atom(("jet", k), lambda: Atom("jet", order=k))


def param(name: str) -> Atom:
    if not name:
        raise ValueError("parameter name must be nonempty")
    return _cached_atom(("param", name), lambda: Atom("param", name=name))


def _cached_atom(key, build):
    atom = _ATOM_CACHE.get(key)
    if atom is None:
        atom = _ATOM_CACHE[key] = build()
    return atom


def jet_or_dep(k: int) -> Atom:
    return dep() if k == 0 else jet(k)


def atom_name(a: Atom) -> str:
    if a.kind == "indep":
        return "x"
    if a.kind == "dep":
        return "y"
    if a.kind == "jet":
        return "y" + "'" * a.order if a.order <= 3 else f"y^({a.order})"
    if a.kind == "param":
        return a.name
    return f"{a.fn}({format_expr(a.arg)})"


# A base inside a monomial: Atom, compound Expr, or a positive integer
# (prime) carried as a plain int under a fractional exponent.
Base = Union[Atom, "Expr", int]


def _base_key(b) -> tuple:
    if isinstance(b, Atom):
        return b._key
    if isinstance(b, int):
        return ("c", b)
    return ("e",) + b._key


_ONE_RAT = Fraction(1)
_ZERO_RAT = Fraction(0)


class Expr:
    """A normalized symbolic expression.  Immutable and hashable."""

    __slots__ = ("_terms", "_key", "_hash", "_flags")

    def __init__(self, terms: tuple, key: tuple):
        # Internal: use the module constructors / operators, never directly.
        self._terms = terms
        self._key = key
        self._hash = hash(key)
        self._flags: dict = {}

    # -- construction -----------------------------------------------------

    @staticmethod
    def rational(value) -> "Expr":
        c = _as_fraction(value)
        if c == 0:
            return ZERO
        return _expr_from_terms({(): c})

    @staticmethod
    def atom(a: Atom) -> "Expr":
        return a.as_expr()

    # -- basic queries ----------------------------------------------------

    @property
    def terms(self) -> tuple:
        """Tuple of (monomial, coefficient); monomial is ((base, exp), ...)."""
        return self._terms

    def is_zero_expr(self) -> bool:
        return not self._terms

    def is_rational_const(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and not self._terms[0][0])

    def as_rational(self) -> Fraction:
        if not self._terms:
            return _ZERO_RAT
        if len(self._terms) == 1 and not self._terms[0][0]:
            return self._terms[0][1]
        raise ExprError("expression is not a rational constant")

    def __eq__(self, other):
        return isinstance(other, Expr) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Expr({format_expr(self)})"

    def __str__(self):
        return format_expr(self)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc = dict(self._terms)
        for mono, c in other._terms:
            _acc_add(acc, mono, c)
        return _expr_from_terms(acc)

    __radd__ = __add__

    def __neg__(self):
        return _expr_from_terms({m: -c for m, c in self._terms})

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self._terms or not other._terms:
            return ZERO
        acc: dict = {}
        for m1, c1 in self._terms:
            for m2, c2 in other._terms:
                piece = _term_product(m1, c1, m2, c2)
                if isinstance(piece, Expr):
                    for mono, c in piece._terms:
                        _acc_add(acc, mono, c)
                else:
                    mono, c = piece
                    _acc_add(acc, mono, c)
        return _expr_from_terms(acc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.pow(Fraction(-1))

    def __rtruediv__(self, other):
        return _coerce(other) * self.pow(Fraction(-1))

    def __pow__(self, exponent):
        return self.pow(exponent)

    def pow(self, exponent) -> "Expr":
        r = _as_fraction(exponent)
        if r == 0:
            return ONE
        if not self._terms:
            if r > 0:
                return ZERO
            raise DomainError("zero raised to a non-positive power")
        if r.denominator == 1:
            k = r.numerator
            if k == 1:
                return self
            if k > 1 and len(self._terms) > 1:
                return _int_pow(self, k)
        if len(self._terms) == 1:
            mono, coeff = self._terms[0]
            out_coeff, const_bases = _const_pow(coeff, r)
            items = dict(const_bases)
            for b, e in mono:
                items[b] = items.get(b, _ZERO_RAT) + e * r
            return _make_term(out_coeff, items)
        # Multi-term base under a negative or fractional exponent: factor out
        # the positive rational content so equal bases merge structurally.
        content, body = _extract_content(self)
        out_coeff, const_bases = _const_pow(content, r)
        items = dict(const_bases)
        items[body] = items.get(body, _ZERO_RAT) + r
        return _make_term(out_coeff, items)

    # -- calculus / rewriting ----------------------------------------------

    def diff(self, a: Atom) -> "Expr":
        return diff(self, a)

    def substitute(self, bindings: Mapping[Atom, "Expr"]) -> "Expr":
        return substitute(self, bindings)


def _coerce(value):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Expr.rational(value)
    if isinstance(value, Atom):
        return value.as_expr()
    return NotImplemented


def _acc_add(acc: dict, mono, coeff):
    cur = acc.get(mono)
    if cur is None:
        acc[mono] = coeff
    else:
        cur = cur + coeff
        if cur:
            acc[mono] = cur
        else:
            del acc[mono]


def _expr_from_terms(acc: Mapping) -> Expr:
    items = [(m, c) for m, c in acc.items() if c]
    items.sort(key=lambda t: _mono_key(t[0]))
    terms = tuple(items)
    key = tuple((_mono_key(m), (c.numerator, c.denominator)) for m, c in terms)
    return Expr(terms, key)


def _mono_key(mono) -> tuple:
    return tuple((_base_key(b), (e.numerator, e.denominator)) for b, e in mono)


ZERO = _expr_from_terms({})
ONE = _expr_from_terms({(): _ONE_RAT})


def _term_product(m1, c1, m2, c2):
    """Multiply two terms.  Returns (mono, coeff) or a full Expr when the
    merged exponents force re-expansion (sum base at a positive integer
    power, constant base leaving (0,1))."""
    coeff = c1 * c2
    items: dict = dict(m1)
    needs_rework = False
    for b, e in m2:
        cur = items.get(b)
        if cur is None:
            items[b] = e
        else:
            tot = cur + e
            if tot:
                items[b] = tot
                if not isinstance(b, Atom):
                    needs_rework = True
            else:
                del items[b]
    if not needs_rework:
        for b, e in items.items():
            if isinstance(b, Expr):
                if e.denominator == 1 and e > 0:
                    needs_rework = True
                    break
            elif isinstance(b, int):
                if not (0 < e < 1):
                    needs_rework = True
                    break
    if needs_rework:
        return _make_term(coeff, items)
    mono = tuple(sorted(items.items(), key=lambda t: _base_key(t[0])))
    return mono, coeff


def _make_term(coeff: Fraction, items: Mapping) -> Expr:
    """Build an expression from coefficient * product(base^exp), restoring
    all normal-form invariants (expansion, constant folding)."""
    if coeff == 0:
        return ZERO
    expandables = []
    kept: dict = {}
    for b, e in items.items():
        if not e:
            continue
        if isinstance(b, Expr):
            if e.denominator == 1 and e > 0:
                expandables.append((b, e.numerator))
            else:
                kept[b] = e
        elif isinstance(b, int):
            # constant base: keep the exponent inside (0,1)
            k = math.floor(e)
            frac = e - k
            if k:
                coeff *= Fraction(b) ** k
            if frac:
                kept[b] = frac
        else:
            kept[b] = e
    mono = tuple(sorted(kept.items(), key=lambda t: _base_key(t[0])))
    result = _expr_from_terms({mono: coeff})
    for b, k in expandables:
        result = result * _int_pow(b, k)
    return result


def _int_pow(e: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k == 1:
        return e
    half = _int_pow(e, k // 2)
    out = half * half
    if k % 2:
        out = out * e
    return out


def _extract_content(e: Expr):
    """Split a multi-term expression as content * body, content a positive
    rational, body with coprime integer coefficients (sign preserved)."""
    nums = [c.numerator for _, c in e._terms]
    dens = [c.denominator for _, c in e._terms]
    g = 0
    for n in nums:
        g = math.gcd(g, abs(n))
    l = 1
    for d in dens:
        l = l * d // math.gcd(l, d)
    content = Fraction(g, l)
    if content == 1:
        return content, e
    inv = 1 / content
    body = _expr_from_terms({m: c * inv for m, c in e._terms})
    return content, body


# -- exact powers of rational constants -------------------------------------

_SMALL_PRIME_LIMIT = 100_000


def _factor_int(n: int) -> list:
    """Trial-division factorization; the final cofactor may be composite
    (kept whole) when it exceeds the small-prime search."""
    out = []
    p = 2
    while p * p <= n and p < _SMALL_PRIME_LIMIT:
        if n % p == 0:
            a = 0
            while n % p == 0:
                n //= p
                a += 1
            out.append((p, a))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def _const_pow(c: Fraction, r: Fraction):
    """c**r as (rational coefficient, {prime_base: fractional exponent})."""
    if r.denominator == 1:
        return c ** r.numerator, {}
    if c == 0:
        raise DomainError("zero under a fractional power")
    sign = _ONE_RAT
    if c < 0:
        if r.denominator % 2 == 1:
            sign = Fraction(-1) ** (r.numerator % 2)
            c = -c
        else:
            raise DomainError("even root of a negative rational")
    coeff = sign
    bases: dict = {}
    for prime, mult in _factor_int(c.numerator) + [
        (p, -a) for p, a in _factor_int(c.denominator)
    ]:
        if prime == 1:
            continue
        e = r * mult
        k = math.floor(e)
        frac = e - k
        if k:
            coeff *= Fraction(prime) ** k
        if frac:
            bases[prime] = bases.get(prime, _ZERO_RAT) + frac
    return coeff, bases


# -- transcendental calls ----------------------------------------------------

def transcendental(fn: str, arg: Expr) -> Expr:
    """Opaque call atom; only exact special values at 0 and ln(1) fold."""
    if fn not in _TRANSC_FNS:
        raise ValueError(f"unsupported function {fn!r}")
    if arg.is_rational_const():
        v = arg.as_rational()
        if v == 0:
            if fn == "exp":
                return ONE
            if fn == "ln":
                raise DomainError("ln(0)")
            if fn in ("sin", "arctan"):
                return ZERO
            if fn == "cos":
                return ONE
        if v == 1 and fn == "ln":
            return ZERO
    return Atom("transc", fn=fn, arg=arg).as_expr()


_D_TRANSC: dict = {
    "exp": lambda a: transcendental("exp", a.arg),
    "ln": lambda a: a.arg.pow(Fraction(-1)),
    "arctan": lambda a: (ONE + a.arg * a.arg).pow(Fraction(-1)),
    "sin": lambda a: transcendental("cos", a.arg),
    "cos": lambda a: -transcendental("sin", a.arg),
}


# -- differentiation ---------------------------------------------------------

_CACHE_ENABLED = True
_DIFF_CACHE: dict = {}


def set_cache_enabled(enabled: bool) -> None:
    """Toggle transparent memoization (results are identical either way)."""
    global _CACHE_ENABLED
    _CACHE_ENABLED = bool(enabled)
    if not enabled:
        _DIFF_CACHE.clear()


def diff(e: Expr, a: Atom) -> Expr:
    """Exact partial derivative, all other atoms held fixed."""
    if a.kind == "transc":
        raise ValueError("cannot differentiate with respect to a transcendental atom")
    if _CACHE_ENABLED:
        hit = _DIFF_CACHE.get((e, a))
        if hit is not None:
            return hit
    acc: dict = {}
    for mono, coeff in e._terms:
        for i, (b, ex) in enumerate(mono):
            db = _diff_base(b, a)
            if db.is_zero_expr():
                continue
            rest = dict(mono)
            rest[b] = ex - 1
            piece = _make_term(coeff * ex, rest) * db
            for m, c in piece._terms:
                _acc_add(acc, m, c)
    out = _expr_from_terms(acc)
    if _CACHE_ENABLED:
        _DIFF_CACHE[(e, a)] = out
    return out


def _diff_base(b, a: Atom) -> Expr:
    if isinstance(b, Atom):
        if b == a:
            return ONE
        if b.kind == "transc":
            inner = diff(b.arg, a)
            if inner.is_zero_expr():
                return ZERO
            return _D_TRANSC[b.fn](b) * inner
        return ZERO
    if isinstance(b, Expr):
        return diff(b, a)
    return ZERO


# -- substitution ------------------------------------------------------------

def substitute(e: Expr, bindings: Mapping[Atom, Expr]) -> Expr:
    """Simultaneous replacement of atoms by expressions, renormalized."""
    if not bindings:
        return e
    out = ZERO
    for mono, coeff in e._terms:
        piece = Expr.rational(coeff)
        for b, ex in mono:
            piece = piece * _subst_base(b, bindings).pow(ex)
        out = out + piece
    return out


def _subst_base(b, bindings) -> Expr:
    if isinstance(b, Atom):
        direct = bindings.get(b)
        if direct is not None:
            return direct
        if b.kind == "transc":
            new_arg = substitute(b.arg, bindings)
            if new_arg == b.arg:
                return b.as_expr()
            return transcendental(b.fn, new_arg)
        return b.as_expr()
    if isinstance(b, Expr):
        return substitute(b, bindings)
    return _make_term(_ONE_RAT, {b: _ONE_RAT})


# -- structure scans ---------------------------------------------------------

def walk_bases(e: Expr):
    """Yield every base reachable in the expression tree (including inside
    compound bases and transcendental arguments)."""
    seen = set()
    stack = [e]
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        for mono, _ in cur._terms:
            for b, ex in mono:
                yield b, ex
                if isinstance(b, Expr):
                    stack.append(b)
                elif isinstance(b, Atom) and b.kind == "transc":
                    stack.append(b.arg)


def leaf_atoms(e: Expr) -> set:
    """Sampleable coordinates: indep/dep/jet/param atoms, looking through
    compound bases and transcendental arguments."""
    out = set()
    for b, _ in walk_bases(e):
        if isinstance(b, Atom) and b.kind != "transc":
            out.add(b)
    return out


def max_jet_order(e: Expr):
    """Highest jet order present; 0 if only y appears, None if no y at all."""
    best = None
    for b, _ in walk_bases(e):
        if isinstance(b, Atom):
            if b.kind == "jet":
                best = b.order if best is None else max(best, b.order)
            elif b.kind == "dep" and best is None:
                best = 0
    return best


def is_rational_fragment(e: Expr) -> bool:
    """True when the expression is a rational function of its atoms: no
    transcendental atoms, no fractional exponents anywhere."""
    flag = e._flags.get("rat")
    if flag is None:
        flag = True
        for b, ex in walk_bases(e):
            if ex.denominator != 1 or isinstance(b, int):
                flag = False
                break
            if isinstance(b, Atom) and b.kind == "transc":
                flag = False
                break
        e._flags["rat"] = flag
    return flag


def is_polynomial(e: Expr) -> bool:
    """True when every base is an atom with a nonnegative integer exponent."""
    for mono, _ in e._terms:
        for b, ex in mono:
            if not isinstance(b, Atom) or b.kind == "transc":
                return False
            if ex.denominator != 1 or ex < 0:
                return False
    return True


def renormalized(e: Expr) -> Expr:
    """Rebuild the expression from scratch through the public constructors
    (used to assert idempotence of normalization)."""
    out = ZERO
    for mono, coeff in e._terms:
        piece = Expr.rational(coeff)
        for b, ex in mono:
            if isinstance(b, Atom):
                if b.kind == "transc":
                    piece = piece * transcendental(b.fn, renormalized(b.arg)).pow(ex)
                else:
                    piece = piece * b.as_expr().pow(ex)
            elif isinstance(b, Expr):
                piece = piece * renormalized(b).pow(ex)
            else:
                piece = piece * _make_term(_ONE_RAT, {b: ex})
        out = out + piece
    return out


# -- printing ----------------------------------------------------------------

def _format_exponent(e: Fraction) -> str:
    if e.denominator == 1 and e >= 0:
        return str(e.numerator)
    if e.denominator == 1:
        return f"({e.numerator})"
    return f"({e.numerator}/{e.denominator})"


def _format_base_pow(b, e: Fraction) -> str:
    if isinstance(b, Atom):
        s = atom_name(b)
    elif isinstance(b, int):
        s = str(b)
    else:
        s = "(" + format_expr(b) + ")"
    if e == 1:
        return s
    return f"{s}^{_format_exponent(e)}"


def _format_coeff(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def format_expr(e: Expr) -> str:
    """Render in the grammar accepted by :mod:`liesym.parse` (round-trips)."""
    if not e._terms:
        return "0"
    chunks = []
    for idx, (mono, coeff) in enumerate(e._terms):
        sign = "-" if coeff < 0 else "+"
        mag = -coeff if coeff < 0 else coeff
        factors = [_format_base_pow(b, ex) for b, ex in mono]
        if not factors:
            body = _format_coeff(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([_format_coeff(mag)] + factors)
        if idx == 0:
            chunks.append(body if sign == "+" else "-" + body)
        else:
            chunks.append(f" {sign} {body}")
    return "".join(chunks)
