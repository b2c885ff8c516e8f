"""Invariant differentiation: certify lambda candidates against the defining
linear PDE pr(X)(lambda) = lambda * D_x(xi), apply D = lambda * D_x to climb
from an invariant of order k to one of order k+1, and run the two-invariant
recursion w_k = D_x(w_{k-1}) / D_x(w_{k-2})."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Sequence

import mpmath

from .expr import Expr, ExprError, leaf_atoms, max_jet_order
from .jet import MAX_JET_ORDER, VectorField, apply_prolonged, prolong, total_derivative
from .numeric import (
    DEFAULT_PROBE,
    ProbeConfig,
    ZeroStatus,
    ZeroVerdict,
    _BadPoint,
    eval_mp,
    is_zero,
    sample_point,
)


class DegenerateDenominator(ExprError):
    pass


@dataclass(frozen=True)
class InvariantDiffOperator:
    """D = lambda * D_x for a specific algebra."""

    lam: Expr
    algebra_label: str = ""
    verified_to_order: int = 0


def verify_lambda(fields: Sequence[VectorField], lam: Expr,
                  probe: ProbeConfig = DEFAULT_PROBE) -> List[ZeroVerdict]:
    """Per-field verdict on pr(X)(lambda) - lambda * D_x(xi)."""
    top = max_jet_order(lam)
    k = top if top is not None else 0
    verdicts = []
    for X in fields:
        residual = apply_prolonged(prolong(X, k), lam) - lam * total_derivative(X.xi)
        verdicts.append(is_zero(residual, probe))
    return verdicts


def apply_D(op: InvariantDiffOperator, phi: Expr,
            max_order: int = MAX_JET_ORDER) -> Expr:
    """lambda * D_x(phi), normalized; raises MaxOrderExceeded at the jet cap."""
    return op.lam * total_derivative(phi, max_order)


def lie_recursion(u: Expr, v: Expr, steps: int,
                  max_order: int = MAX_JET_ORDER) -> List[Expr]:
    """[w_1, ..., w_{steps+1}] with w_1 = v and
    w_k = D_x(w_{k-1}) / D_x(w_{k-2}), seeded by w_0 = u.

    Each quotient of total derivatives of invariants is again an invariant.
    Raises DegenerateDenominator when a denominator derivative vanishes
    identically.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    out = [v]
    prev, cur = u, v
    for _ in range(steps):
        den = total_derivative(prev, max_order)
        if is_zero(den).status == ZeroStatus.EXACT_ZERO:
            raise DegenerateDenominator(
                "total derivative of the previous invariant is identically zero")
        num = total_derivative(cur, max_order)
        nxt = num / den
        out.append(nxt)
        prev, cur = cur, nxt
    return out


def functional_rank(exprs: Sequence[Expr], probe: ProbeConfig = DEFAULT_PROBE,
                    samples: int = 4) -> int:
    """Generic rank of the Jacobian of the given jet-space functions with
    respect to all their coordinates, estimated at high precision.

    Used to certify functional dependence: for invariants {phi1, D(phi1),
    phi2} the rank stays at 2 even when the tabulated phi2 differs from
    D(phi1) by a function of phi1.
    """
    from .expr import diff

    atoms = set()
    for e in exprs:
        atoms |= leaf_atoms(e)
    atoms = sorted(atoms, key=lambda a: a._key)
    jac = [[diff(e, a) for a in atoms] for e in exprs]
    rng = random.Random(probe.seed)
    best = 0
    done = 0
    attempts = 0
    while done < samples and attempts < probe.max_retries * samples:
        attempts += 1
        point = sample_point(rng, atoms, probe)
        try:
            with mpmath.workdps(probe.digits + 15):
                rows = [[eval_mp(entry, point, probe.digits) for entry in row]
                        for row in jac]
                best = max(best, _numeric_rank(rows, probe.digits))
            done += 1
        except _BadPoint:
            continue
    if done < samples:
        raise ExprError("could not sample enough points for the Jacobian rank")
    return best


def _numeric_rank(rows, digits: int) -> int:
    tol = mpmath.mpf(10) ** (-(digits // 2))
    m = len(rows)
    n = len(rows[0]) if rows else 0
    rank = 0
    col = 0
    r = 0
    rows = [list(row) for row in rows]
    while r < m and col < n:
        piv, pval = None, tol
        for i in range(r, m):
            if abs(rows[i][col]) > pval:
                piv, pval = i, abs(rows[i][col])
        if piv is None:
            col += 1
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(r + 1, m):
            f = rows[i][col] / rows[r][col]
            rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        rank += 1
        r += 1
        col += 1
    return rank
