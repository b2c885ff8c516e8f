"""Exact symbolic machinery for point-symmetry analysis of scalar ODEs."""

from .expr import (
    Atom,
    DomainError,
    Expr,
    ExprError,
    ONE,
    ZERO,
    dep,
    diff,
    format_expr,
    indep,
    is_polynomial,
    is_rational_fragment,
    jet,
    jet_or_dep,
    leaf_atoms,
    max_jet_order,
    param,
    set_cache_enabled,
    substitute,
    transcendental,
)

__all__ = [
    "Atom",
    "DomainError",
    "Expr",
    "ExprError",
    "ONE",
    "ZERO",
    "dep",
    "diff",
    "format_expr",
    "indep",
    "is_polynomial",
    "is_rational_fragment",
    "jet",
    "jet_or_dep",
    "leaf_atoms",
    "max_jet_order",
    "param",
    "set_cache_enabled",
    "substitute",
    "transcendental",
]
