"""Two-tier zero certification and exact/high-precision evaluation.

On the rational-function fragment (no transcendental atoms, no fractional
powers) zero is decided exactly: every compound or atomic denominator is
cleared, which leaves a genuine polynomial in the atoms, and a polynomial is
zero iff its normal form is empty.  Outside the fragment the expression is
probed at seeded random rational points with mpmath at the configured
precision; a verdict of ProbablyZero requires |value| < 10^-(digits-20) at
every tested point, keeping twenty orders of magnitude between roundoff and
an honest nonzero value.

Probe points are rationals with numerator and denominator bounded by 10^6,
with magnitudes kept in [1/4, 4] so that high-degree expressions stay well
conditioned.  Points that land within 10^-10 of a pole, a branch point or a
non-positive fractional-power base are resampled, at most 100 times, after
which SamplingExhausted signals an identically singular expression.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional

import mpmath

from .expr import (
    Atom,
    Expr,
    ExprError,
    ZERO,
    atom_name,
    is_rational_fragment,
    leaf_atoms,
    walk_bases,
)


class SamplingExhausted(ExprError):
    pass


class ExactEvalError(ExprError):
    pass


class _BadPoint(Exception):
    pass


class ZeroStatus(Enum):
    EXACT_ZERO = "ExactZero"
    EXACT_NONZERO = "ExactNonzero"
    PROBABLY_ZERO = "ProbablyZero"
    PROBABLY_NONZERO = "ProbablyNonzero"


@dataclass(frozen=True)
class ZeroVerdict:
    status: ZeroStatus
    points_tested: int = 0
    precision_digits: Optional[int] = None
    witness: Optional[dict] = None
    magnitude: Optional[str] = None

    @property
    def is_zero(self) -> bool:
        return self.status in (ZeroStatus.EXACT_ZERO, ZeroStatus.PROBABLY_ZERO)

    @property
    def is_exact(self) -> bool:
        return self.status in (ZeroStatus.EXACT_ZERO, ZeroStatus.EXACT_NONZERO)

    def to_json(self) -> dict:
        out = {"status": self.status.value}
        if self.points_tested:
            out["points"] = self.points_tested
        if self.precision_digits:
            out["digits"] = self.precision_digits
        if self.witness is not None:
            out["witness"] = self.witness
        if self.magnitude is not None:
            out["magnitude"] = self.magnitude
        return out


@dataclass(frozen=True)
class ProbeConfig:
    """Sampling policy: point count, precision, region and seed.

    Points are rationals sign*num/den with den in [den_low, den_high] and
    magnitudes in [mag_low, mag_high]; numerators and denominators stay
    bounded by 4 * den_high.
    """

    points: int = 20
    digits: int = 50
    seed: int = 20240101
    max_retries: int = 100
    den_low: int = 1_000
    den_high: int = 1_000_000
    mag_low: Fraction = Fraction(1, 4)
    mag_high: Fraction = Fraction(4)

    def with_seed(self, seed: int) -> "ProbeConfig":
        return ProbeConfig(self.points, self.digits, seed, self.max_retries,
                           self.den_low, self.den_high, self.mag_low, self.mag_high)


DEFAULT_PROBE = ProbeConfig()


def derive_seed(seed: int, *parts) -> int:
    """Stable child seed, independent of execution order."""
    h = hashlib.sha256(repr((seed,) + parts).encode()).digest()
    return int.from_bytes(h[:8], "big")


def sample_rational(rng: random.Random, probe: ProbeConfig) -> Fraction:
    den = rng.randint(probe.den_low, probe.den_high)
    lo = int(den * probe.mag_low) + 1
    hi = max(int(den * probe.mag_high), lo)
    num = rng.randint(lo, hi)
    sign = 1 if rng.random() < 0.5 else -1
    return Fraction(sign * num, den)


def sample_point(rng: random.Random, atoms, probe: ProbeConfig,
                 positive=frozenset()) -> dict:
    out = {}
    for a in sorted(atoms, key=lambda a: a._key):
        v = sample_rational(rng, probe)
        out[a] = abs(v) if a in positive else v
    return out


# -- denominator clearing (exact tier) ---------------------------------------

def clear_denominators(e: Expr) -> Expr:
    """Numerator polynomial of a rational-fragment expression: e multiplied
    by a product of its (nonzero) denominator polynomials, fully expanded."""
    num, _den = _as_num_den(e)
    return num


def _as_num_den(e: Expr):
    """(N, D): e == N / prod(D) with N polynomial and D a dict mapping each
    denominator base (atom or polynomial expression) to its positive power."""
    per_term = []
    den_max: dict = {}
    for mono, coeff in e._terms:
        t_num = Expr.rational(coeff)
        t_den: dict = {}
        for b, ex in mono:
            k = ex.numerator  # rational fragment: integer exponents only
            if isinstance(b, Atom):
                if k >= 0:
                    t_num = t_num * b.as_expr().pow(k)
                else:
                    t_den[b] = t_den.get(b, 0) - k
            elif isinstance(b, Expr):
                nb, db = _as_num_den(b)
                if k >= 0:
                    raise ExprError("unexpected expanded compound base")
                for dkey, dpow in db.items():
                    t_num = t_num * _key_expr(dkey).pow(dpow * (-k))
                t_den[nb] = t_den.get(nb, 0) + (-k)
            else:
                raise ExprError("constant surd outside the rational fragment")
        per_term.append((t_num, t_den))
        for key, p in t_den.items():
            if den_max.get(key, 0) < p:
                den_max[key] = p
    total = ZERO
    for t_num, t_den in per_term:
        piece = t_num
        for key, p in den_max.items():
            gap = p - t_den.get(key, 0)
            if gap:
                piece = piece * _key_expr(key).pow(gap)
        total = total + piece
    return total, den_max


def _key_expr(key) -> Expr:
    return key.as_expr() if isinstance(key, Atom) else key


# -- numeric evaluation -------------------------------------------------------

_TINY_EXP = -10  # admissibility threshold 10^-10 for denominators/arguments


def eval_mp(e: Expr, point: Mapping[Atom, Fraction], digits: int):
    """Evaluate at a rational point with mpmath at `digits` working digits.

    Raises _BadPoint when the point is inadmissible (near-singular
    denominator, non-positive fractional-power base, bad ln argument).
    """
    with mpmath.workdps(digits + 15):
        tiny = mpmath.mpf(10) ** _TINY_EXP
        cache: dict = {}
        return _eval_expr(e, point, cache, tiny)


def _eval_expr(e: Expr, point, cache, tiny):
    hit = cache.get(e)
    if hit is not None:
        return hit
    total = mpmath.mpf(0)
    for mono, coeff in e._terms:
        v = mpmath.mpf(coeff.numerator) / coeff.denominator
        for b, ex in mono:
            bv = _eval_base(b, point, cache, tiny)
            if ex.denominator == 1:
                k = ex.numerator
                if k < 0 and abs(bv) < tiny:
                    raise _BadPoint
                v *= bv ** k
            else:
                if bv < tiny:
                    raise _BadPoint
                v *= bv ** (mpmath.mpf(ex.numerator) / ex.denominator)
        total += v
    cache[e] = total
    return total


def _eval_base(b, point, cache, tiny):
    if isinstance(b, Atom):
        if b.kind == "transc":
            arg = _eval_expr(b.arg, point, cache, tiny)
            if b.fn == "ln":
                if arg < tiny:
                    raise _BadPoint
                return mpmath.ln(arg)
            return getattr(mpmath, {"arctan": "atan"}.get(b.fn, b.fn))(arg)
        val = point.get(b)
        if val is None:
            raise ExprError(f"no value supplied for {atom_name(b)}")
        return mpmath.mpf(val.numerator) / val.denominator
    if isinstance(b, int):
        return mpmath.mpf(b)
    return _eval_expr(b, point, cache, tiny)


# -- exact rational evaluation ------------------------------------------------

def eval_exact(e: Expr, point: Mapping[Atom, Fraction]) -> Fraction:
    """Exact value at a rational point.  Fractional powers succeed only when
    the base value is a perfect power; transcendentals are not supported."""
    total = Fraction(0)
    for mono, coeff in e._terms:
        v = coeff
        for b, ex in mono:
            if isinstance(b, Atom):
                if b.kind == "transc":
                    raise ExactEvalError("transcendental atom in exact evaluation")
                bv = point.get(b)
                if bv is None:
                    raise ExprError(f"no value supplied for {atom_name(b)}")
            elif isinstance(b, int):
                bv = Fraction(b)
            else:
                bv = eval_exact(b, point)
            if ex.denominator == 1:
                if bv == 0 and ex < 0:
                    raise _BadPoint
                v *= bv ** ex.numerator
            else:
                root = _exact_root(bv, ex.denominator)
                if root is None:
                    raise ExactEvalError(
                        f"{bv} is not an exact {ex.denominator}th power")
                v *= root ** ex.numerator
        total += v
    return total


def _exact_root(v: Fraction, q: int):
    if v < 0:
        if q % 2 == 0:
            return None
        r = _exact_root(-v, q)
        return None if r is None else -r
    if v == 0:
        return Fraction(0)
    num = _int_root(v.numerator, q)
    den = _int_root(v.denominator, q)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def _int_root(n: int, q: int):
    r = round(n ** (1.0 / q))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** q == n:
            return cand
    return None


def fractional_power_degrees(exprs) -> dict:
    """Per atom, the lcm of denominators of fractional exponents applied
    directly to it; sampling t^q for such atoms keeps evaluation exact."""
    out: dict = {}
    for e in exprs:
        for b, ex in walk_bases(e):
            if isinstance(b, Atom) and b.kind != "transc" and ex.denominator != 1:
                q = ex.denominator
                cur = out.get(b, 1)
                out[b] = cur * q // _gcd(cur, q)
    return out


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


# -- the zero test ------------------------------------------------------------

def is_zero(e: Expr, probe: ProbeConfig = DEFAULT_PROBE,
            positive=frozenset()) -> ZeroVerdict:
    """Certify whether an expression is identically zero.

    Exact verdicts on the rational fragment; elsewhere seeded random probing
    at `probe.points` admissible points and `probe.digits` digits.  Atoms in
    ``positive`` are sampled on the positive axis (branch restrictions).
    """
    if e.is_zero_expr():
        return ZeroVerdict(ZeroStatus.EXACT_ZERO)
    if is_rational_fragment(e):
        cleared = clear_denominators(e)
        if cleared.is_zero_expr():
            return ZeroVerdict(ZeroStatus.EXACT_ZERO)
        witness, magnitude = _exact_witness(e, probe)
        return ZeroVerdict(ZeroStatus.EXACT_NONZERO,
                           witness=witness, magnitude=magnitude)
    rng = random.Random(probe.seed)
    atoms = sorted(leaf_atoms(e), key=lambda a: a._key)
    threshold = mpmath.mpf(10) ** (-(probe.digits - 20))
    for _ in range(probe.points):
        point, value = _probe_once(e, atoms, rng, probe, positive)
        with mpmath.workdps(probe.digits + 15):
            if abs(value) >= threshold:
                witness = {atom_name(a): f"{v.numerator}/{v.denominator}"
                           for a, v in point.items()}
                return ZeroVerdict(
                    ZeroStatus.PROBABLY_NONZERO,
                    points_tested=probe.points,
                    precision_digits=probe.digits,
                    witness=witness,
                    magnitude=mpmath.nstr(abs(value), 6),
                )
    return ZeroVerdict(ZeroStatus.PROBABLY_ZERO,
                       points_tested=probe.points,
                       precision_digits=probe.digits)


def _exact_witness(e: Expr, probe: ProbeConfig):
    """Best-effort concrete point where an exactly-nonzero rational-fragment
    expression takes a nonzero value, for the verification log."""
    rng = random.Random(derive_seed(probe.seed, "witness"))
    atoms = sorted(leaf_atoms(e), key=lambda a: a._key)
    for _ in range(probe.max_retries):
        point = sample_point(rng, atoms, probe)
        try:
            value = eval_exact(e, point)
        except (_BadPoint, ExactEvalError):
            continue
        if value:
            witness = {atom_name(a): f"{v.numerator}/{v.denominator}"
                       for a, v in point.items()}
            return witness, mpmath.nstr(mpmath.mpf(value.numerator) / value.denominator, 6)
    return None, None


def _probe_once(e: Expr, atoms, rng: random.Random, probe: ProbeConfig,
                positive=frozenset()):
    for _ in range(probe.max_retries):
        point = sample_point(rng, atoms, probe, positive)
        try:
            return point, eval_mp(e, point, probe.digits)
        except _BadPoint:
            continue
    raise SamplingExhausted(
        f"no admissible probe point found in {probe.max_retries} attempts; "
        "the expression appears identically singular")


def atom_by_name(name: str) -> Atom:
    """Resolve a grammar-level coordinate name to its atom."""
    from .expr import dep, indep, jet, param

    if name == "x":
        return indep()
    if name == "y":
        return dep()
    if set(name) <= {"y", "'"} and name.startswith("y"):
        return jet(len(name) - 1)
    if name.startswith("y^(") and name.endswith(")"):
        return jet(int(name[3:-1]))
    return param(name)
