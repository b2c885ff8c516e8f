"""Jet-space machinery: total derivative, prolongation, canonical form.

A point vector field xi(x,y)*Dx + eta(x,y)*Dy is prolonged to order k by the
recursion eta[j] = D_x(eta[j-1]) - y^(j) * D_x(xi) with eta[0] = eta, where
D_x = d/dx + y'*d/dy + sum_k y^(k+1)*d/dy^(k) is the total derivative.  The
coefficient eta[j] involves jets of order at most j.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expr import Expr, ExprError, dep, diff, indep, jet, max_jet_order

MAX_JET_ORDER = 12


class MaxOrderExceeded(ExprError):
    pass


class OrderMismatch(ExprError):
    pass


@dataclass(frozen=True)
class VectorField:
    """xi * d/dx + eta * d/dy with coefficients depending on x, y only."""

    xi: Expr
    eta: Expr
    label: str = ""

    def __post_init__(self):
        for name, e in (("xi", self.xi), ("eta", self.eta)):
            order = max_jet_order(e)
            if order is not None and order > 0:
                raise ValueError(f"{name} coefficient must not contain jet atoms")

    def scaled(self, c) -> "VectorField":
        factor = Expr.rational(c)
        return VectorField(self.xi * factor, self.eta * factor, self.label)


@dataclass(frozen=True)
class ProlongedField:
    base: VectorField
    order: int
    coeffs: tuple  # (eta[1], ..., eta[order])


def total_derivative(e: Expr, max_order: int = MAX_JET_ORDER) -> Expr:
    """D_x e, exact.  Refuses input already at the jet ceiling because the
    result would introduce order max_order + 1."""
    top = max_jet_order(e)
    if top is not None and top >= max_order:
        raise MaxOrderExceeded(
            f"expression already contains jet order {top} >= limit {max_order}")
    out = diff(e, indep()) + jet(1).as_expr() * diff(e, dep())
    k = 1
    limit = top if top is not None else 0
    while k <= limit:
        d = diff(e, jet(k))
        if not d.is_zero_expr():
            out = out + jet(k + 1).as_expr() * d
        k += 1
    return out


def prolong(X: VectorField, k: int, max_order: int = MAX_JET_ORDER) -> ProlongedField:
    """Prolongation to order k (k >= 0)."""
    if k < 0:
        raise ValueError("prolongation order must be >= 0")
    if k > max_order:
        raise MaxOrderExceeded(f"prolongation order {k} exceeds limit {max_order}")
    dxi = total_derivative(X.xi, max_order)
    coeffs = []
    prev = X.eta
    for j in range(1, k + 1):
        cur = total_derivative(prev, max_order) - jet(j).as_expr() * dxi
        coeffs.append(cur)
        prev = cur
    return ProlongedField(X, k, tuple(coeffs))


def apply_prolonged(PX: ProlongedField, e: Expr) -> Expr:
    """Apply the prolonged field as a derivation on a jet-space function."""
    top = max_jet_order(e)
    if top is not None and top > PX.order:
        raise OrderMismatch(
            f"expression has jet order {top} but the field is prolonged to {PX.order}")
    out = PX.base.xi * diff(e, indep()) + PX.base.eta * diff(e, dep())
    for j, coeff in enumerate(PX.coeffs, start=1):
        d = diff(e, jet(j))
        if not d.is_zero_expr():
            out = out + coeff * d
    return out


def apply_field(X: VectorField, e: Expr, max_order: int = MAX_JET_ORDER) -> Expr:
    """Prolong just far enough for e and apply."""
    top = max_jet_order(e)
    order = top if top is not None else 0
    return apply_prolonged(prolong(X, order, max_order), e)


def characteristic(X: VectorField) -> Expr:
    """w = eta - xi*y', the generator of the evolutionary form."""
    return X.eta - X.xi * jet(1).as_expr()


def coefficient_row(X: VectorField, order: int) -> list:
    """[xi, eta, eta[1], ..., eta[order]] for rank and determinant matrices."""
    pf = prolong(X, order)
    return [X.xi, X.eta, *pf.coeffs]
