"""The data layer: every algebra family, canonical equation, invariant,
invariant-differentiation operator and Lie determinant, stored as JSON and
instantiated into concrete expressions at a chosen order n.

Record templates use the expression grammar with `n` (and any bound or
user-supplied parameters) resolved at instantiation time, `H(...)` for
arbitrary-function slots, `series(k, lo, hi, tmpl)` for variable-length
argument lists, `fact`/`factprod` for factorial coefficients and `totd` for
total derivatives.  Four record families with root-dependent generator sets
(solution chains and their logarithmic/first-order variants) are assembled
by builders on top of :mod:`liesym.linear_ode`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import List, Mapping, Optional, Sequence

from ..expr import Expr, ExprError, ONE, ZERO, dep, indep, jet_or_dep, transcendental
from ..jet import VectorField, total_derivative
from ..linear_ode import (
    CharSpec,
    coeffs_from_solutions,
    fundamental_solutions,
    linear_ode_from_spec,
)
from ..parse import Context, parse_expression, parse_vector_field


class CatalogError(ExprError):
    pass


class ConstraintViolation(CatalogError):
    pass


@dataclass(frozen=True)
class AlgebraSpec:
    """The algebra-family view of a record: label, generator templates with
    their parameters, the valid order range, and abstract-algebra metadata."""

    label: str
    dimension_formula: str
    n_range: tuple
    generators: tuple
    parameters: tuple
    metadata: dict


@dataclass(frozen=True)
class CatalogRecord:
    """A raw record: label, template strings and metadata, as loaded."""

    label: str
    data: dict

    @property
    def family(self) -> str:
        return self.data.get("family", "")

    @property
    def notes(self) -> str:
        return self.data.get("notes", "")

    def algebra_spec(self) -> AlgebraSpec:
        lo, hi = self.data.get("n_range", [1, None])
        gens = tuple(g if isinstance(g, str) else dict(g)
                     for g in self.data.get("generators", []))
        params = tuple(p["name"] for p in self.data.get("parameters", []))
        return AlgebraSpec(self.label, self.data.get("dimension", ""),
                           (lo, hi), gens, params,
                           dict(self.data.get("metadata", {})))


@dataclass
class ConcreteEquation:
    equation: "OdeEquation"
    uses_H: bool
    h_name: str


@dataclass
class ConcreteRecord:
    label: str
    n: int
    dimension: int
    params: dict
    fields: list
    equations: list  # list[ConcreteEquation]
    invariants: list  # list[(order:int, Expr)]
    lam: Optional[Expr]
    lie_det_expected: Optional[Expr]
    singular_factors: list
    blocks: dict
    equivalences: list  # (Expr, Expr, positivity-atoms) certified-equal forms
    dependences: list  # groups of Exprs with Jacobian rank < group size
    fundamental_check: bool
    extra_symmetries: list  # raw dicts, grounded lazily by the harness
    generator_probes: list  # raw dicts for bound-parameter discrimination
    case_note: str = ""


# -- arithmetic over template formulas ----------------------------------------

def eval_formula(text, env: Mapping[str, Fraction]) -> Fraction:
    """Evaluate an arithmetic template ('n+1', 'fact(n-1)', '7') exactly."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    ctx = Context(params={k: Fraction(v) for k, v in env.items() if v is not None})
    e = parse_expression(str(text), ctx)
    return e.as_rational()


def check_condition(cond: str, env: Mapping[str, Fraction]) -> bool:
    """'alpha != n-1' or 'K = n/(n-1)', evaluated exactly.

    Conditions on symbolic (unset) parameters hold vacuously.
    """
    if "!=" in cond:
        lhs, rhs = cond.split("!=")
        op = "!="
    elif "=" in cond:
        lhs, rhs = cond.split("=")
        op = "="
    else:
        raise CatalogError(f"cannot parse condition {cond!r}")
    try:
        lv = eval_formula(lhs.strip(), env)
        rv = eval_formula(rhs.strip(), env)
    except ExprError:
        return True  # involves a symbolic parameter: not checkable
    return (lv == rv) if op == "=" else (lv != rv)


# -- loading -------------------------------------------------------------------

def data_dir() -> Path:
    import os

    override = os.environ.get("LIESYM_CATALOG_DIR")
    if override:
        return Path(override)
    return Path(__file__).parent / "data"


def load_catalog(path: Optional[Path] = None) -> List[CatalogRecord]:
    """Load every record and check the shipped manifest (count and labels)."""
    base = Path(path) if path is not None else data_dir()
    manifest_path = base / "manifest.json"
    if not manifest_path.exists():
        raise CatalogError(f"manifest not found under {base}")
    manifest = json.loads(manifest_path.read_text())
    records = []
    seen = set()
    for fname in sorted(p.name for p in base.glob("*.json") if p.name != "manifest.json"):
        try:
            data = json.loads((base / fname).read_text())
        except json.JSONDecodeError as exc:
            raise CatalogError(f"{fname}: invalid JSON: {exc}") from exc
        label = data.get("label")
        if not label:
            raise CatalogError(f"{fname}: missing label")
        if label in seen:
            raise CatalogError(f"{fname}: duplicate label {label}")
        seen.add(label)
        records.append(CatalogRecord(label, data))
    expected = manifest.get("labels", [])
    got = sorted(seen)
    if got != sorted(expected):
        missing = sorted(set(expected) - seen)
        extra = sorted(seen - set(expected))
        raise CatalogError(
            f"manifest mismatch: missing {missing}, unexpected {extra}")
    if len(records) != manifest.get("count"):
        raise CatalogError(
            f"manifest mismatch: {len(records)} records, manifest says {manifest.get('count')}")
    return records


def find_record(records: Sequence[CatalogRecord], label: str) -> CatalogRecord:
    for r in records:
        if r.label == label:
            return r
    raise CatalogError(f"no record labelled {label!r}")


# -- arbitrary-function slots --------------------------------------------------

def _h_identity(args: list) -> Expr:
    out = ZERO
    for a in args:
        out = out + a
    return out


def _h_square(args: list) -> Expr:
    return _h_identity(args) ** 2


def _h_one(args: list) -> Expr:
    return ONE


H_CHOICES: dict = {"identity": _h_identity, "square": _h_square, "one": _h_one}


# -- instantiation -------------------------------------------------------------

def instantiate(record: CatalogRecord, n: Optional[int] = None,
                params: Optional[Mapping[str, object]] = None,
                h_choice: str = "identity",
                enforce_constraints: bool = True,
                bound_overrides: Optional[Mapping[str, Fraction]] = None,
                max_jet: int = 12) -> ConcreteRecord:
    """Ground a record at order n with concrete parameter values.

    ``params`` values may be Fractions/ints, strings of formulas in n, or
    None to keep a parameter symbolic.  Raises ConstraintViolation naming
    the violated constraint unless ``enforce_constraints`` is off.
    """
    data = record.data
    n = n if n is not None else default_order(record)
    lo, hi = data.get("n_range", [1, None])
    if n < lo or (hi is not None and n > hi):
        raise ConstraintViolation(f"{record.label}: order n={n} outside range [{lo}, {hi}]")
    env: dict = {"n": Fraction(n)}
    for name, formula in data.get("bound", {}).items():
        if bound_overrides and name in bound_overrides:
            env[name] = Fraction(bound_overrides[name])
        else:
            env[name] = eval_formula(formula, env)
    # defaults, then user overrides
    values: dict = {}
    for p in data.get("parameters", []):
        name = p["name"]
        default = data.get("defaults", {}).get(name)
        values[name] = None if default is None else eval_formula(default, env)
    if params:
        for name, v in params.items():
            if name not in values and name not in env:
                raise CatalogError(f"{record.label}: unknown parameter {name!r}")
            values[name] = None if v is None else (
                eval_formula(v, env) if isinstance(v, str) else Fraction(v))
    env.update({k: v for k, v in values.items()})
    if enforce_constraints:
        for p in data.get("parameters", []):
            for excl in p.get("exclude", []):
                if values.get(p["name"]) is not None:
                    bad = eval_formula(excl, env)
                    if values[p["name"]] == bad:
                        raise ConstraintViolation(
                            f"{record.label}: {p['name']} = {excl} excluded")
    # select a guarded case, if any
    content = dict(data)
    case_note = ""
    for case in data.get("cases", []):
        if all(check_condition(c, env) for c in case["when"]):
            content.update({k: v for k, v in case.items() if k != "when"})
            case_note = "; ".join(case["when"])
            break
    dimension = int(eval_formula(data.get("dimension", "0"), env))
    builder = data.get("builder")
    ctx = Context(params=dict(env), max_jet=max_jet)
    blocks: dict = {}
    for name, tmpl in content.get("building_blocks", {}).items():
        blocks[name] = parse_expression(tmpl, ctx)
        ctx.macros[name] = blocks[name]
    if builder:
        fields, extra_blocks = _BUILDERS[builder](content, n, env, ctx)
        blocks.update(extra_blocks)
    else:
        fields = _build_generators(content.get("generators", []), ctx)
    if dimension and len(fields) != dimension:
        raise CatalogError(
            f"{record.label}: {len(fields)} generators, declared dimension {dimension}")
    invariants = []
    for inv in content.get("invariants", []):
        order = int(eval_formula(inv["order"], env))
        expr = parse_expression(inv["expr"], ctx)
        invariants.append((order, expr))
        ctx.macros[f"phi{len(invariants)}"] = expr
        blocks[f"phi{len(invariants)}"] = expr
    h_fn = H_CHOICES[h_choice]
    equations = []
    for eq in content.get("equations", []):
        uses_H = "H(" in eq["rhs"].replace(" ", "")
        ectx = Context(params=dict(ctx.params), macros=dict(ctx.macros),
                       functions={"H": h_fn}, max_jet=max_jet)
        rhs = parse_expression(eq["rhs"], ectx)
        order = int(eval_formula(eq.get("order", data.get("order", "n")), env))
        from ..invariance import OdeEquation

        equations.append(ConcreteEquation(OdeEquation(order, rhs), uses_H,
                                          h_choice if uses_H else ""))
    lam = None
    if content.get("lambda"):
        lam = parse_expression(content["lambda"], ctx)
    lie_det = None
    if content.get("lie_determinant"):
        lie_det = parse_expression(content["lie_determinant"], ctx)
    singular = [parse_expression(s, ctx) for s in content.get("singular_factors", [])]
    equivalences = []
    for pair in content.get("equivalences", []):
        from ..numeric import atom_by_name

        if isinstance(pair, dict):
            ea = parse_expression(pair["a"], ctx)
            eb = parse_expression(pair["b"], ctx)
            pos = frozenset(atom_by_name(nm) for nm in pair.get("positive", []))
        else:
            ea = parse_expression(pair[0], ctx)
            eb = parse_expression(pair[1], ctx)
            pos = frozenset()
        equivalences.append((ea, eb, pos))
    dependences = []
    for group in content.get("dependences", []):
        dependences.append([parse_expression(s, ctx) for s in group])
    return ConcreteRecord(
        label=record.label,
        n=n,
        dimension=dimension or len(fields),
        params={k: v for k, v in values.items()},
        fields=fields,
        equations=equations,
        invariants=invariants,
        lam=lam,
        lie_det_expected=lie_det,
        singular_factors=singular,
        blocks=blocks,
        equivalences=equivalences,
        dependences=dependences,
        fundamental_check=bool(content.get("fundamental_check")),
        extra_symmetries=content.get("extra_symmetries", []),
        generator_probes=content.get("generator_probes", []),
        case_note=case_note,
    )


def default_order(record: CatalogRecord) -> int:
    lo, _hi = record.data.get("n_range", [1, None])
    return lo


def secondary_order(record: CatalogRecord) -> Optional[int]:
    """A second sample order (min + 3), to catch n-dependent coefficient bugs."""
    lo, hi = record.data.get("n_range", [1, None])
    cand = lo + 3
    if hi is not None and cand > hi:
        return None
    return cand


def _build_generators(specs: list, ctx: Context) -> list:
    fields = []
    for spec in specs:
        if isinstance(spec, str):
            xi, eta = parse_vector_field(spec, ctx)
            fields.append(VectorField(xi, eta, f"X{len(fields)+1}"))
        else:
            var = spec["var"]
            lo = int(eval_formula(spec["from"], ctx.params))
            hi = int(eval_formula(spec["to"], ctx.params))
            for k in range(lo, hi + 1):
                sub = ctx.child(**{var: Fraction(k)})
                xi, eta = parse_vector_field(spec["template"], sub)
                fields.append(VectorField(xi, eta, f"X{len(fields)+1}"))
    return fields


# -- builders for root-dependent records ----------------------------------------

def _default_roots(count: int, avoid_zero: bool = False) -> list:
    out = []
    k = 1
    if not avoid_zero:
        out.append(Fraction(0))
    while len(out) < count:
        out.append(Fraction(k))
        if len(out) < count:
            out.append(Fraction(-k))
        k += 1
    return out[:count]


def _char_poly_tail(roots: Sequence[Fraction]) -> list:
    """[a_1, ..., a_d] with t^d + a_1 t^(d-1) + ... + a_d = prod(t - r)."""
    poly = [Fraction(1)]
    for r in roots:
        nxt = [Fraction(0)] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i] += c
            nxt[i + 1] -= c * r
        poly = nxt
    return poly[1:]


def _exp_solutions(roots: Sequence[Fraction]) -> list:
    x = indep().as_expr()
    out = []
    for r in roots:
        out.append(transcendental("exp", Fraction(r) * x) if r else ONE)
    return out


def _linear_chain_builder(content: dict, n: int, env: dict, ctx: Context):
    """Generators Dx and eta_i(x)*Dy where the eta_i span the kernel of an
    order-(n-1) constant-coefficient operator; blocks u = that operator
    applied to y, and Du = its total derivative."""
    roots = _default_roots(n - 1)
    etas = _exp_solutions(roots)
    fields = [VectorField(ONE, ZERO, "X1")]
    fields += [VectorField(ZERO, s, f"X{i+2}") for i, s in enumerate(etas)]
    a = _char_poly_tail(roots)
    u = jet_or_dep(n - 1).as_expr()
    for i, coeff in enumerate(a):
        u = u + Expr.rational(coeff) * jet_or_dep(n - 2 - i).as_expr()
    blocks = {"u": u, "Du": total_derivative(u)}
    ctx.macros.update(blocks)
    return fields, blocks


def _log_chain_builder(content: dict, n: int, env: dict, ctx: Context):
    """Generators Dx, y*Dy and eta_i(x)*Dy with the eta_i spanning the kernel
    of an order-(n-2) operator; blocks u, Du, D2u_low (second total
    derivative with the top jet removed)."""
    roots = _default_roots(n - 2, avoid_zero=True)
    etas = _exp_solutions(roots)
    fields = [VectorField(ONE, ZERO, "X1"), VectorField(ZERO, dep().as_expr(), "X2")]
    fields += [VectorField(ZERO, s, f"X{i+3}") for i, s in enumerate(etas)]
    a = _char_poly_tail(roots)
    u = jet_or_dep(n - 2).as_expr()
    for i, coeff in enumerate(a):
        u = u + Expr.rational(coeff) * jet_or_dep(n - 3 - i).as_expr()
    du = total_derivative(u)
    d2u_low = total_derivative(du) - jet_or_dep(n).as_expr()
    blocks = {"u": u, "Du": du, "D2u_low": d2u_low}
    ctx.macros.update(blocks)
    return fields, blocks


def _prop1_builder(content: dict, n: int, env: dict, ctx: Context):
    """Solution-chain algebra at dimension n+1: Dy, y*Dy, x*Dy and the
    prescribed solutions; the equation is reconstructed from the solutions
    and exposed through the block `rhs`."""
    x = indep().as_expr()
    xis = [x ** j for j in range(2, n - 1)] + [transcendental("exp", x)]
    coeffs = coeffs_from_solutions(xis, n, 2)
    fields = [VectorField(ZERO, ONE, "X1"),
              VectorField(ZERO, dep().as_expr(), "X2"),
              VectorField(ZERO, x, "X3")]
    fields += [VectorField(ZERO, s, f"X{i+4}") for i, s in enumerate(xis)]
    rhs = ZERO
    for i, c in enumerate(coeffs, start=2):
        rhs = rhs + c * jet_or_dep(i).as_expr()
    blocks = {"lin_rhs": rhs}
    ctx.macros.update(blocks)
    return fields, blocks


def _char_roots_builder(content: dict, n: int, env: dict, ctx: Context):
    """Fundamental-solution algebra at dimension n+2 for a constant
    coefficient equation built from a mixed real/complex root set."""
    if n >= 2:
        reals = _default_roots(n - 2, avoid_zero=True)
        spec = CharSpec(real_roots=tuple(reals), complex_pairs=((Fraction(0), Fraction(1)),))
    else:
        spec = CharSpec(real_roots=(Fraction(1),))
    ode = linear_ode_from_spec(spec)
    sols = fundamental_solutions(spec)
    fields = [VectorField(ZERO, s, f"X{i+1}") for i, s in enumerate(sols)]
    fields.append(VectorField(ZERO, dep().as_expr(), f"X{n+1}"))
    fields.append(VectorField(ONE, ZERO, f"X{n+2}"))
    blocks = {"lin_rhs": ode.rhs()}
    ctx.macros.update(blocks)
    return fields, blocks


_BUILDERS: dict = {
    "linear_chain": _linear_chain_builder,
    "log_chain": _log_chain_builder,
    "prop1": _prop1_builder,
    "char_roots": _char_roots_builder,
}
