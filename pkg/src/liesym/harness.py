"""Batch verification over the catalog: plans every applicable check per
record, runs them with seeds derived stably from (record, check, detail), and
assembles a deterministic machine-readable report.

Check kinds:

* ``equation``   -- prolonged invariance of each canonical equation, under
                    three arbitrary-function instantiations where one occurs;
* ``invariant``  -- annihilation of each stored differential invariant;
* ``lambda``     -- the defining PDE of the invariant-differentiation factor;
* ``closure``    -- D(phi1) is again annihilated;
* ``lie_det``    -- determinant matches the stored closed form up to the
                    row-parity sign, reassembles from its factors, and the
                    expected singular factors appear;
* ``singular``   -- each solved singular equation is invariant;
* ``rank``       -- d_{m-1} = 1 and d_m = 2 at generic points;
* ``equivalence``/``dependence`` -- alternative presentations agree;
* ``extra_symmetry``/``generator_probe`` -- exceptional-parameter
                    discrimination (a field or weight is admitted exactly at
                    the stated parameter value).
"""

from __future__ import annotations

import fnmatch
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from .catalog import (
    CatalogRecord,
    default_order,
    find_record,
    instantiate,
    load_catalog,
    secondary_order,
)
from .expr import ExprError
from .invariance import check_differential_invariant, check_equation_invariance, rank_and_count
from .invdiff import InvariantDiffOperator, apply_D, functional_rank, verify_lambda
from .jet import MAX_JET_ORDER, VectorField
from .liedet import lie_determinant, singular_equations
from .numeric import DEFAULT_PROBE, ProbeConfig, derive_seed, is_zero
from .parse import Context, parse_vector_field


@dataclass
class CheckResult:
    record: str
    check: str
    detail: str
    n: int
    params: dict
    seed: int
    passed: bool
    verdicts: list
    elapsed_ms: int
    note: str = ""

    def to_json(self) -> dict:
        out = {
            "record": self.record,
            "check": self.check,
            "detail": self.detail,
            "instantiation": {"n": self.n, "params": self.params, "seed": self.seed},
            "pass": self.passed,
            "verdicts": self.verdicts,
            "elapsed_ms": self.elapsed_ms,
        }
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class VerificationReport:
    seed: int
    probe_points: int
    probe_digits: int
    results: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "points": self.probe_points,
            "digits": self.probe_digits,
            "pass": self.passed,
            "checks": [r.to_json() for r in self.results],
        }

    def render(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)


H_NAMES = ("identity", "square", "one")


def _params_json(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        out[k] = None if v is None else f"{Fraction(v)}"
    return out


def _verdicts_json(verdicts) -> list:
    return [v.to_json() for v in verdicts]


def _result(record, check, detail, con_n, params, seed, passed, verdicts, t0, note=""):
    return CheckResult(record, check, detail, con_n, _params_json(params), seed,
                       passed, verdicts, int((time.time() - t0) * 1000), note)


def plan_orders(rec: CatalogRecord) -> list:
    orders = [default_order(rec)]
    second = secondary_order(rec)
    if second is not None:
        orders.append(second)
    return orders


def run_record_checks(rec: CatalogRecord, probe: ProbeConfig,
                      n_override: Optional[int] = None,
                      param_overrides: Optional[dict] = None) -> List[CheckResult]:
    out: List[CheckResult] = []
    orders = [n_override] if n_override is not None else plan_orders(rec)
    for n in orders:
        out.extend(_run_one_order(rec, n, probe, param_overrides))
    return out


def _seeded(probe: ProbeConfig, *parts) -> ProbeConfig:
    return probe.with_seed(derive_seed(probe.seed, *parts))


def _run_one_order(rec: CatalogRecord, n: int, probe: ProbeConfig,
                   param_overrides: Optional[dict]) -> List[CheckResult]:
    label = rec.label
    out: List[CheckResult] = []

    def emit(check, detail, params, passed, verdicts, t0, note=""):
        seed = derive_seed(probe.seed, label, n, check, detail)
        out.append(_result(label, check, detail, n, params, seed,
                           passed, verdicts, t0, note))

    try:
        con = instantiate(rec, n=n, params=param_overrides)
    except ExprError as exc:
        t0 = time.time()
        emit("instantiate", "", {}, False, [str(exc)], t0)
        return out

    # equations (with H choices when an arbitrary function occurs)
    needs_h = any("H(" in eq["rhs"].replace(" ", "")
                  for eq in rec.data.get("equations", [])) or any(
        "H(" in e.get("rhs", "").replace(" ", "")
        for case in rec.data.get("cases", []) for e in case.get("equations", []))
    h_names = H_NAMES if needs_h else ("identity",)
    for h in h_names:
        try:
            con_h = instantiate(rec, n=n, params=param_overrides, h_choice=h)
        except ExprError as exc:
            t0 = time.time()
            emit("equation", f"H={h}", {}, False, [str(exc)], t0)
            continue
        for i, ce in enumerate(con_h.equations):
            if not ce.uses_H and h != "identity":
                continue
            t0 = time.time()
            detail = f"eq{i+1}@{ce.equation.order}" + (f" H={h}" if ce.uses_H else "")
            pr = _seeded(probe, label, n, "equation", detail)
            verdicts = check_equation_invariance(con_h.fields, ce.equation, pr)
            emit("equation", detail, con_h.params,
                 all(v.is_zero for v in verdicts), _verdicts_json(verdicts), t0)

    # invariants
    for order, phi in con.invariants:
        t0 = time.time()
        detail = f"phi@{order}"
        pr = _seeded(probe, label, n, "invariant", detail)
        verdicts = check_differential_invariant(con.fields, phi, pr)
        emit("invariant", detail, con.params,
             all(v.is_zero for v in verdicts), _verdicts_json(verdicts), t0)

    # lambda and closure
    if con.lam is not None:
        t0 = time.time()
        pr = _seeded(probe, label, n, "lambda", "")
        verdicts = verify_lambda(con.fields, con.lam, pr)
        emit("lambda", "", con.params,
             all(v.is_zero for v in verdicts), _verdicts_json(verdicts), t0)
        if con.invariants:
            order, phi = con.invariants[0]
            if order + 1 <= MAX_JET_ORDER:
                t0 = time.time()
                pr = _seeded(probe, label, n, "closure", "")
                op = InvariantDiffOperator(con.lam, label, order)
                dphi = apply_D(op, phi)
                verdicts = check_differential_invariant(con.fields, dphi, pr)
                emit("closure", f"D(phi)@{order+1}", con.params,
                     all(v.is_zero for v in verdicts), _verdicts_json(verdicts), t0)

    # Lie determinant, factors, singular equations
    if con.lie_det_expected is not None or con.singular_factors:
        t0 = time.time()
        pr = _seeded(probe, label, n, "lie_det", "")
        try:
            res = lie_determinant(con.fields, label)
            notes = []
            ok = True
            if con.lie_det_expected is not None:
                vplus = is_zero(res.determinant - con.lie_det_expected, pr)
                if vplus.is_zero:
                    notes.append("sign +")
                else:
                    vminus = is_zero(res.determinant + con.lie_det_expected, pr)
                    if vminus.is_zero:
                        notes.append("sign -")
                    else:
                        ok = False
                        notes.append("determinant does not match the stored form")
            if not res.non_polynomial:
                if not (res.reassembled() - res.determinant).is_zero_expr():
                    ok = False
                    notes.append("factor reassembly failed")
            for want in con.singular_factors:
                if not any(is_zero(want - f, pr).is_zero or is_zero(want + f, pr).is_zero
                           for f, _m in res.factors):
                    ok = False
                    notes.append(f"expected singular factor missing: {want}")
            emit("lie_det", "", con.params, ok, [], t0, "; ".join(notes))
            for s in singular_equations(res):
                if s.equation is None or s.equation.order >= MAX_JET_ORDER:
                    continue
                t0 = time.time()
                detail = f"singular@{s.equation.order}"
                pr2 = _seeded(probe, label, n, "singular", detail)
                verdicts = check_equation_invariance(con.fields, s.equation, pr2)
                emit("singular", detail, con.params,
                     all(v.is_zero for v in verdicts), _verdicts_json(verdicts), t0)
        except ExprError as exc:
            emit("lie_det", "", con.params, False, [str(exc)], t0)

    # rank counting at the fundamental orders
    if con.fundamental_check:
        m = con.dimension
        for order, want_d in ((m - 1, 1), (m, 2)):
            if order > MAX_JET_ORDER:
                continue
            t0 = time.time()
            detail = f"d@{order}"
            pr = _seeded(probe, label, n, "rank", detail)
            try:
                rep = rank_and_count(con.fields, order, pr)
                emit("rank", detail, con.params, rep.count_dn == want_d,
                     [rep.to_json()], t0)
            except ExprError as exc:
                emit("rank", detail, con.params, False, [str(exc)], t0)

    # alternative presentations
    for i, (ea, eb, pos) in enumerate(con.equivalences):
        t0 = time.time()
        detail = f"pair{i+1}"
        pr = _seeded(probe, label, n, "equivalence", detail)
        v = is_zero(ea - eb, pr, positive=pos)
        emit("equivalence", detail, con.params, v.is_zero, [v.to_json()], t0)
    for i, group in enumerate(con.dependences):
        t0 = time.time()
        detail = f"group{i+1}"
        pr = _seeded(probe, label, n, "dependence", detail)
        try:
            r = functional_rank(group, pr)
            emit("dependence", detail, con.params, r < len(group),
                 [{"rank": r, "size": len(group)}], t0)
        except ExprError as exc:
            emit("dependence", detail, con.params, False, [str(exc)], t0)

    # exceptional-parameter discrimination: an extra field is admitted
    # exactly at the stated parameter value
    for i, spec in enumerate(con.extra_symmetries):
        for which, expect_zero in (("zero_at", True), ("nonzero_at", False)):
            values = spec.get(which)
            if not values:
                continue
            t0 = time.time()
            detail = f"extra{i+1} {spec['field']} @ " + \
                ",".join(f"{k}={v}" for k, v in values.items())
            pr = _seeded(probe, label, n, "extra_symmetry", detail)
            try:
                con_v = instantiate(rec, n=n, params=values,
                                    enforce_constraints=False)
                ctx = Context(params={k: Fraction(v) if v is not None else None
                                      for k, v in {**{"n": n}, **con_v.params}.items()})
                xi, eta = parse_vector_field(spec["field"], ctx)
                extra_field = VectorField(xi, eta, "extra")
                verdicts = check_equation_invariance(
                    [extra_field], con_v.equations[0].equation, pr)
                good = all(v.is_zero for v in verdicts) if expect_zero \
                    else any(not v.is_zero for v in verdicts)
                emit("extra_symmetry", detail, con_v.params, good,
                     _verdicts_json(verdicts), t0)
            except ExprError as exc:
                emit("extra_symmetry", detail, {}, False, [str(exc)], t0)

    # bound-parameter discrimination: the stated generator weight is the
    # only one admitting the equation
    for i, spec in enumerate(con.generator_probes):
        for which, expect_zero in (("zero_at", True), ("nonzero_at", False)):
            formula = spec.get(which)
            if formula is None:
                continue
            t0 = time.time()
            detail = f"probe{i+1} {spec['param']}={formula}"
            pr = _seeded(probe, label, n, "generator_probe", detail)
            try:
                from .catalog import eval_formula

                value = eval_formula(formula, {"n": Fraction(n)})
                con_v = instantiate(rec, n=n, bound_overrides={spec["param"]: value})
                verdicts = check_equation_invariance(
                    con_v.fields, con_v.equations[0].equation, pr)
                good = all(v.is_zero for v in verdicts) if expect_zero \
                    else any(not v.is_zero for v in verdicts)
                emit("generator_probe", detail, con_v.params, good,
                     _verdicts_json(verdicts), t0)
            except ExprError as exc:
                emit("generator_probe", detail, {}, False, [str(exc)], t0)

    return out


def _worker(args):
    label, seed, points, digits, n_override, params = args
    probe = ProbeConfig(points=points, digits=digits, seed=seed)
    records = load_catalog()
    rec = find_record(records, label)
    return [r for r in run_record_checks(rec, probe, n_override, params)]


def run_verification(filter_glob: Optional[str] = None,
                     probe: ProbeConfig = DEFAULT_PROBE,
                     workers: int = 1,
                     n_override: Optional[int] = None,
                     param_overrides: Optional[dict] = None) -> VerificationReport:
    records = load_catalog()
    chosen = [r for r in records
              if filter_glob is None or fnmatch.fnmatch(r.label, filter_glob)]
    chosen.sort(key=lambda r: r.label)
    results: List[CheckResult] = []
    if workers > 1:
        jobs = [(r.label, probe.seed, probe.points, probe.digits,
                 n_override, param_overrides) for r in chosen]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_worker, jobs):
                results.extend(chunk)
    else:
        for rec in chosen:
            results.extend(run_record_checks(rec, probe, n_override, param_overrides))
    results.sort(key=lambda r: (r.record, r.n, r.check, r.detail))
    return VerificationReport(probe.seed, probe.points, probe.digits, results)
