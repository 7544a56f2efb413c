"""Batch command-line front end.

Every subcommand builds a report dictionary, prints it as JSON (default) or
CSV, and optionally writes an SVG snapshot.  Exact rationals are printed as
``"p/q"``.  Exit status: 0 on success, 1 when a verdict fails, 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import math
import sys
from dataclasses import fields, is_dataclass
from fractions import Fraction

import numpy as np

from . import cantor as C
from . import convergence as CV
from . import fubini as FB
from . import lebesgue as LB
from . import riemann as RM
from .catalog import BadParams, DSLError, UnknownName, indicator, parse_function, parse_sequence, parse_set
from .rational import format_rational, parse_extended
from .sets import (Interval, Multirectangle, OpenSet, Rectangle, Topology, UnboundedSet, dyadic_decompose, length,
                   union_measure)
from .svg import multirectangle_svg, trace_svg

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# serialization


def jsonable(obj):
    """Plain JSON data with rationals as ``"p/q"`` strings."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        return v if math.isfinite(v) else format_rational(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Interval):
        return str(obj)
    if isinstance(obj, Rectangle):
        return [str(s) for s in obj.sides]
    if isinstance(obj, Multirectangle):
        return [jsonable(r) for r in obj.components] + [f"tail:{c.name}" for c in obj.tail]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [jsonable(v) for v in obj]
    if is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in fields(obj) if f.repr}
    return str(obj)


def _rational(text: str, name: str) -> Fraction:
    try:
        v = parse_extended(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"{name}: bad number {text!r}") from exc
    if isinstance(v, float):
        raise UsageError(f"{name} must be finite")
    return Fraction(v)


def _positive(text: str, name: str) -> Fraction:
    v = _rational(text, name)
    if v <= 0:
        raise UsageError(f"{name} must be positive")
    return v


def _rect(text: str, name: str) -> Rectangle:
    try:
        ms = parse_set(text)
    except (DSLError, ValueError) as exc:
        raise UsageError(f"{name}: {exc}") from exc
    if len(ms.components) != 1:
        raise UsageError(f"{name} must be a single rectangle")
    return ms.components[0]


def _integral(res: LB.IntegralResult) -> dict:
    return {
        "value": res.value,
        "errorBound": res.error_bound,
        "verdict": res.verdict,
        "trace": [{"n": r.n, "witnessLength": r.witness_length, "value": r.value, "tol": r.tol}
                  for r in res.trace if isinstance(r, LB.StageRecord)],
    }


# ---------------------------------------------------------------------------
# subcommands; each returns (report, csv rows, svg text or None, exit code)


def cmd_integrate(a):
    f = parse_function(a.fn)
    stages = int(a.stages)
    rtol = float(_positive(a.rtol, "--rtol"))
    R = None
    if a.domain:
        R = LB._intersect(f.domain, _rect(a.domain, "--domain"))
        f = f.restricted(R)
    if a.set:
        A = parse_set(a.set)
        res = LB.integrate_over_set(f, indicator(A), stages=min(stages, 16), riemann_tol=rtol)
    else:
        res = LB.integrate(f, R, stages, rtol)
    report = {"command": "integrate", "fn": a.fn, **_integral(res)}
    if a.probe:
        table = LB.abs_continuity_probe(f, seed=a.seed, count=int(a.probe), stages=min(stages, 16))
        report["probe"] = {"bound": table.bound, "boundedCheck": table.bounded_check,
                           "rows": [{"measure": r.measure, "integral": r.integral, "errorBound": r.error_bound}
                                    for r in table.rows]}
    rows = report["trace"] or [{"value": res.value, "errorBound": res.error_bound, "verdict": res.verdict}]
    svg = None
    if report["trace"]:
        svg = trace_svg([r["n"] for r in report["trace"]], [float(r["value"]) for r in report["trace"]],
                        f"integrate {a.fn}")
    code = EXIT_OK
    if a.require_summable and res.verdict != LB.NUMBER:
        code = EXIT_FAIL
    return report, rows, svg, code


def cmd_riemann(a):
    f = parse_function(a.fn)
    iv = _rect(a.interval, "--interval").sides[0]
    tol = float(_positive(a.tol, "--tol"))
    try:
        res = RM.riemann_integrate(f, iv, tol, int(a.max_levels))
    except RM.NotRiemannIntegrable as exc:
        report = {"command": "riemann", "fn": a.fn, "integrable": False, "message": str(exc)}
        return report, [report], None, EXIT_FAIL
    report = {"command": "riemann", "fn": a.fn, "integrable": True, "value": res.value, "gap": res.gap,
              "levels": res.levels, "cells": res.cells}
    return report, [report], None, EXIT_OK


def cmd_dini(a):
    f = parse_function(a.fn)
    iv = _rect(a.interval, "--interval").sides[0]
    res = RM.dini_test(f, iv, _positive(a.alpha, "--alpha"), _positive(a.eps, "--eps"), int(a.max_n))
    report = {"command": "dini", "fn": a.fn, "passed": res.passed, "n": res.n, "heavyLength": res.heavy_length}
    return report, [report], None, EXIT_OK if res.passed else EXIT_FAIL


def _set_arg(text: str) -> Multirectangle:
    text = text.strip()
    if text.startswith("[["):
        return Multirectangle.from_json(text)
    return parse_set(text)


def cmd_measure(a):
    if a.fn:
        f = parse_function(a.fn)
        lam = LB.measure(f)
        report = {"command": "measure", "fn": a.fn, "measure": lam}
        return report, [report], None, EXIT_OK
    if not a.set:
        raise UsageError("measure needs --set or --fn")
    A = _set_arg(a.set)
    report = {"command": "measure", "set": jsonable(A), "measure": union_measure(A.components),
              "L": length(A), "almostDisjoint": A.is_almost_disjoint}
    if a.box:
        eps = _positive(a.eps, "--eps")
        br = LB.exterior_interior_measure(A, _rect(a.box, "--box"), eps)
        report["exterior"] = list(br.exterior)
        report["interior"] = list(br.interior)
    svg = multirectangle_svg(A, f"measure {a.set}") if A.dim in (1, 2) else None
    return report, [{"measure": report["measure"], "L": report["L"]}], svg, EXIT_OK


def cmd_decompose(a):
    A = _set_arg(a.set)
    opens = OpenSet(Multirectangle(tuple(r.with_topology(Topology.OPEN) for r in A.components)))
    if a.bbox:
        bbox = _rect(a.bbox, "--bbox")
    else:
        d = A.dim
        sides = []
        for k in range(d):
            lo = min(r.sides[k].lo for r in A.components)
            hi = max(r.sides[k].hi for r in A.components)
            sides.append(Interval(math.floor(lo), math.ceil(hi)))
        bbox = Rectangle(tuple(sides))
    cubes = dyadic_decompose(opens, int(a.depth), bbox)
    covered = union_measure(cubes.components)
    total = opens.measure()
    report = {"command": "decompose", "depth": int(a.depth), "count": len(cubes.components),
              "cubeMeasure": covered, "setMeasure": total, "missing": total - covered,
              "cubes": jsonable(cubes)}
    rows = [{"cube": ";".join(str(s) for s in r.sides)} for r in cubes.components]
    svg = multirectangle_svg(cubes, f"dyadic cubes, depth {a.depth}") if cubes.dim in (1, 2) else None
    return report, rows, svg, EXIT_OK


def cmd_cantor(a):
    stage = C.build_stage(a.kind, int(a.stage))
    report = {"command": "cantor", "kind": stage.kind.value, "stage": stage.j,
              "measureRemoved": stage.measure_removed, "measureRetained": stage.measure_retained}
    if a.emit == "intervals":
        report["removed"] = jsonable(stage.removed)
        report["retained"] = jsonable(stage.retained)
        rows = [{"part": "removed", "interval": str(r.sides[0])} for r in stage.removed.components]
        rows += [{"part": "retained", "interval": str(r.sides[0])} for r in stage.retained.components]
    else:
        rows = [{"measureRemoved": stage.measure_removed, "measureRetained": stage.measure_retained}]
    svg = multirectangle_svg(stage.retained, f"{stage.kind.value} stage {stage.j}: retained")
    return report, rows, svg, EXIT_OK


def cmd_egorov(a):
    seq = parse_sequence(a.seq)
    sigmas = tuple(_positive(s, "--sigmas") for s in a.sigmas.split(","))
    wit = CV.egorov_witness(seq, _positive(a.eps, "--eps"), sigmas, grid_size=int(a.grid),
                            n_cap=int(a.ncap))
    table = [{"sigma": r.sigma, "M": r.M, "sup": r.sup, "passed": r.passed} for r in wit.rows(sigmas)]
    report = {"command": "egorov", "seq": a.seq, "eps": wit.eps, "length": wit.length,
              "O": jsonable(wit.O), "passed": wit.passed, "nCap": wit.n_cap,
              "levels": [{"eta": lv.eta, "budget": lv.budget, "m": lv.m, "runs": jsonable(lv.runs)}
                         for lv in wit.levels],
              "table": table}
    svg = multirectangle_svg(Multirectangle(wit.O.components), f"Egorov set O for {a.seq}") \
        if wit.O.components else None
    return report, table, svg, EXIT_OK if wit.passed else EXIT_FAIL


def cmd_converge(a):
    seq = parse_sequence(a.seq)
    if a.top_exp is None:
        a.top_exp = 20 if a.law == "dominated" else 10
    try:
        if a.law == "monotone":
            rep = CV.check_monotone(seq, int(a.top_exp))
        elif a.law == "dominated":
            g = parse_function(a.dominator) if a.dominator else None
            rep = CV.check_dominated(seq, g, int(a.top_exp))
        else:
            rep = CV.fatou_gap(seq, int(a.top_exp))
        code = EXIT_OK if rep.passed else EXIT_FAIL
    except CV.HypothesisViolated as exc:
        rep = exc.report
        rep.notes.append(str(exc))
        code = EXIT_FAIL
    report = {"command": "converge", "seq": a.seq, **rep.as_dict()}
    rows = [{"n": n, "integral": v} for n, v in zip(rep.indices, rep.integrals)]
    svg = None
    if rep.integrals:
        svg = trace_svg(list(rep.indices)[:len(rep.integrals)], [float(v) for v in rep.integrals],
                        f"{a.law}: integrals of {a.seq}")
    return report, rows, svg, code


def cmd_fubini(a):
    if a.set:
        rep = FB.section_identity_check(_set_arg(a.set), int(a.axis))
        report = {"command": "fubini", "mode": "sections", **rep.as_dict()}
        rows = [{"a": x, "b": y, "sectionMeasure": m} for x, y, m in rep.profile]
        return report, rows, None, EXIT_OK if rep.passed else EXIT_FAIL
    if not a.fn:
        raise UsageError("fubini needs --fn or --set")
    f = parse_function(a.fn)
    rect = _rect(a.rect, "--rect") if a.rect else None
    tol = float(_positive(a.tol, "--tol"))
    try:
        rep = FB.fubini_check(f, rect, tol)
        code = EXIT_OK if rep.verdict == FB.PASS else EXIT_FAIL
    except FB.NotSummable as exc:
        rep = exc.report
        code = EXIT_FAIL
    report = {"command": "fubini", "fn": a.fn, **rep.as_dict()}
    rows = [{"order": k, **(v or {}), "gap": report["gaps"].get(k)} for k, v in report["iterated"].items()]
    return report, rows, None, code


COMMANDS = {
    "integrate": cmd_integrate, "riemann": cmd_riemann, "dini": cmd_dini, "measure": cmd_measure,
    "decompose": cmd_decompose, "cantor": cmd_cantor, "egorov": cmd_egorov, "converge": cmd_converge,
    "fubini": cmd_fubini,
}


# ---------------------------------------------------------------------------
# argument parsing


def _globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    g = parser.add_argument_group("output")
    g.add_argument("--json", action="store_true", help="JSON report (default)", **d)
    g.add_argument("--csv", action="store_true", help="CSV table instead of JSON", **d)
    g.add_argument("--svg", metavar="PATH", help="also write an SVG snapshot", **d)
    g.add_argument("--seed", type=int, help="seed for randomized trials", **d)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcint", description="Quasicontinuous-function integration toolkit")
    _globals(p, False)
    p.set_defaults(json=False, csv=False, svg=None, seed=0)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        _globals(sp, True)
        return sp

    sp = add("integrate", "Lebesgue integral of a DSL function")
    sp.add_argument("--fn", required=True)
    sp.add_argument("--domain")
    sp.add_argument("--set")
    sp.add_argument("--stages", type=int, default=LB.DEFAULT_STAGES)
    sp.add_argument("--rtol", default="1e-8")
    sp.add_argument("--probe", type=int, default=0, help="absolute-continuity probe with this many random sets")
    sp.add_argument("--require-summable", action="store_true")

    sp = add("riemann", "Riemann integral by Darboux brackets")
    sp.add_argument("--fn", required=True)
    sp.add_argument("--interval", default="[0,1]")
    sp.add_argument("--tol", default="1e-8")
    sp.add_argument("--max-levels", type=int, default=20)

    sp = add("dini", "Dini oscillation test")
    sp.add_argument("--fn", required=True)
    sp.add_argument("--interval", default="[0,1]")
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--eps", required=True)
    sp.add_argument("--max-n", type=int, default=1 << 16)

    sp = add("measure", "measure of a multirectangle or characteristic function")
    sp.add_argument("--set")
    sp.add_argument("--fn")
    sp.add_argument("--box", help="reference box for exterior/interior brackets")
    sp.add_argument("--eps", default="1/1024")

    sp = add("decompose", "dyadic decomposition of an open set")
    sp.add_argument("--set", required=True)
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--bbox")

    sp = add("cantor", "Cantor and Smith-Volterra-Cantor stages")
    sp.add_argument("--kind", required=True, choices=["ternary", "svc"])
    sp.add_argument("--stage", type=int, required=True)
    sp.add_argument("--emit", choices=["intervals", "measure"], default="intervals")

    sp = add("egorov", "almost-uniform convergence witness")
    sp.add_argument("--seq", required=True)
    sp.add_argument("--eps", required=True)
    sp.add_argument("--sigmas", default="1/2,1/4,1/8,1/16")
    sp.add_argument("--grid", type=int, default=1024)
    sp.add_argument("--ncap", type=int, default=1 << 14)

    sp = add("converge", "monotone, dominated and Fatou checks")
    sp.add_argument("--law", required=True, choices=["monotone", "dominated", "fatou"])
    sp.add_argument("--seq", required=True)
    sp.add_argument("--dominator")
    sp.add_argument("--top-exp", type=int, help="largest index 2**top-exp (default 10; 20 for dominated)")

    sp = add("fubini", "direct versus iterated integrals")
    sp.add_argument("--fn")
    sp.add_argument("--rect")
    sp.add_argument("--tol", default="1e-6")
    sp.add_argument("--set", help="multirectangle for the section identity")
    sp.add_argument("--axis", type=int, default=0)
    return p


def _csv_text(rows) -> str:
    rows = [jsonable(r) for r in rows]
    keys: list[str] = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report, rows, svg, code = COMMANDS[a.command](a)
    except (UsageError, DSLError, UnknownName, BadParams, UnboundedSet) as exc:
        print(f"qcint {a.command}: {exc}", file=err)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"qcint {a.command}: {exc}", file=err)
        return EXIT_USAGE
    if a.csv:
        out.write(_csv_text(rows))
    else:
        out.write(json.dumps(jsonable(report), indent=2) + "\n")
    if a.svg:
        if svg is None:
            print(f"qcint {a.command}: no SVG snapshot for this report", file=err)
        else:
            with open(a.svg, "w", encoding="utf-8") as fh:
                fh.write(svg)
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
