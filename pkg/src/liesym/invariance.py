"""Invariance judgments: equations, differential invariants, rank counting.

An nth-order equation y^(n) = H(x, y, ..., y^(n-1)) is invariant under a
field X when the prolonged action of X on y^(n) - H vanishes after the
substitution y^(n) -> H.  A jet-space function is a differential invariant
when every prolonged generator annihilates it outright.  The number of
independent invariants at order n is d_n = n + 2 - r_n where r_n is the
generic rank of the m x (n+2) matrix of prolonged coefficients.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Sequence

from .expr import Expr, jet, max_jet_order, substitute
from .jet import VectorField, apply_prolonged, coefficient_row, prolong
from .numeric import (
    DEFAULT_PROBE,
    ProbeConfig,
    SamplingExhausted,
    ZeroVerdict,
    _BadPoint,
    eval_exact,
    fractional_power_degrees,
    is_zero,
    sample_rational,
)


@dataclass(frozen=True)
class OdeEquation:
    """y^(order) = rhs, with rhs involving jets of order < order only."""

    order: int
    rhs: Expr

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("equation order must be >= 1")
        top = max_jet_order(self.rhs)
        if top is not None and top >= self.order:
            raise ValueError(
                f"rhs contains jet order {top}, not allowed at equation order {self.order}")

    def defect(self) -> Expr:
        return jet(self.order).as_expr() - self.rhs


@dataclass(frozen=True)
class RankReport:
    order: int
    rank_rn: int
    count_dn: int
    sample_points: tuple

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "rank": self.rank_rn,
            "count": self.count_dn,
            "samples": len(self.sample_points),
        }


def check_equation_invariance(fields: Sequence[VectorField], eq: OdeEquation,
                              probe: ProbeConfig = DEFAULT_PROBE) -> List[ZeroVerdict]:
    """Per-field verdict on pr_n(X)(y^(n) - rhs) restricted to the equation."""
    n = eq.order
    defect = eq.defect()
    constraint = {jet(n): eq.rhs}
    verdicts = []
    for X in fields:
        applied = apply_prolonged(prolong(X, n), defect)
        residual = substitute(applied, constraint)
        verdicts.append(is_zero(residual, probe))
    return verdicts


def check_differential_invariant(fields: Sequence[VectorField], phi: Expr,
                                 probe: ProbeConfig = DEFAULT_PROBE) -> List[ZeroVerdict]:
    """Per-field verdict on pr_k(X)(phi), with no constraint substitution."""
    top = max_jet_order(phi)
    k = top if top is not None else 0
    verdicts = []
    for X in fields:
        residual = apply_prolonged(prolong(X, k), phi)
        verdicts.append(is_zero(residual, probe))
    return verdicts


def coefficient_matrix(fields: Sequence[VectorField], order: int) -> list:
    """m x (order+2) matrix of prolonged coefficients (xi, eta, eta[1..order])."""
    return [coefficient_row(X, order) for X in fields]


def rank_at_point(matrix: list, point: dict) -> int:
    rows = [[eval_exact(entry, point) for entry in row] for row in matrix]
    return _fraction_rank(rows)


def rank_and_count(fields: Sequence[VectorField], order: int,
                   probe: ProbeConfig = DEFAULT_PROBE, samples: int = 5) -> RankReport:
    """Generic rank over >= `samples` exact rational sample points.

    The rank is certified with exact fraction arithmetic at each point and
    the maximum over samples is reported; d_n = order + 2 - rank.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    matrix = coefficient_matrix(fields, order)
    atoms = set()
    for row in matrix:
        for entry in row:
            from .expr import leaf_atoms

            atoms |= leaf_atoms(entry)
    atoms = sorted(atoms, key=lambda a: a._key)
    degrees = fractional_power_degrees(e for row in matrix for e in row)
    rng = random.Random(probe.seed)
    best = 0
    points = []
    tried = 0
    while len(points) < samples and tried < samples * probe.max_retries:
        tried += 1
        point = {}
        for a in atoms:
            v = sample_rational(rng, probe)
            q = degrees.get(a)
            if q:
                v = abs(v) ** q
            point[a] = v
        try:
            r = rank_at_point(matrix, point)
        except (_BadPoint, ZeroDivisionError):
            continue
        points.append(tuple((a, point[a]) for a in atoms))
        if r > best:
            best = r
    if len(points) < samples:
        raise SamplingExhausted("could not find admissible rank sample points")
    return RankReport(order, best, order + 2 - best, tuple(points))


def _fraction_rank(rows: list) -> int:
    if not rows:
        return 0
    m, n = len(rows), len(rows[0])
    rank = 0
    col = 0
    r = 0
    while r < m and col < n:
        pivot = None
        for i in range(r, m):
            if rows[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            col += 1
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][col]
        for i in range(r + 1, m):
            f = rows[i][col] / pv
            if f:
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        rank += 1
        r += 1
        col += 1
    return rank
