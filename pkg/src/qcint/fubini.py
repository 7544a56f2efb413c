"""Reduction formulas: direct integrals against iterated ones.

Iterated integrals fix the outer coordinate at Gauss-Legendre nodes placed
inside the intervals between the cut points of ``f`` along that axis, so
each node sees a single smooth column of pieces.  The inner integral of the
section is a Lebesgue integral of lower dimension.  Cut coordinates
themselves form a null set and are never sampled.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import pieces as P
from .lebesgue import (NUMBER, PLUS_INF, IntegralResult, Summability, TruncationSchedule, _monotone_limit,
                       integrate, is_summable)
from .pieces import Piece, Piecewise, Poly
from .qc import QCFunction, abs_value
from .rational import format_rational
from .sets import Interval, Multirectangle, Rectangle, section, union_measure

Number = Fraction | float

NOT_SUMMABLE = "not-summable"
PASS, FAIL = "pass", "fail"


class InnerNotIntegrable(ValueError):
    def __init__(self, message: str, coordinate):
        super().__init__(message)
        self.coordinate = coordinate


class NotSummable(ValueError):
    def __init__(self, message: str, report: "ReductionReport"):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# sections of descriptors


def _drop(piece: Piece, axis: int, d: int) -> Piece:
    """Re-home a piece that no longer depends on ``axis`` to dimension ``d``."""
    def move(k):
        return k - 1 if k > axis else k

    if isinstance(piece, Poly):
        return Poly(piece.coeffs, move(piece.axis) if piece.degree else 0, d)
    if isinstance(piece, P.CosPower):
        return P.CosPower(piece.m, piece.n, move(piece.axis), d)
    if isinstance(piece, P.Exp):
        return P.Exp(piece.rate, move(piece.axis), d)
    if isinstance(piece, P.RPow):
        return P.RPow(piece.p, move(piece.axis), d)
    if isinstance(piece, P.Sum):
        return P.add(_drop(piece.a, axis, d), _drop(piece.b, axis, d))
    if isinstance(piece, P.Prod):
        return P.mul(_drop(piece.a, axis, d), _drop(piece.b, axis, d))
    if isinstance(piece, P.Extremum):
        return P.extremum(_drop(piece.a, axis, d), _drop(piece.b, axis, d), piece.upper)
    raise TypeError(f"cannot take a section of {piece!r}")


def section_function(f: QCFunction, axis: int, t) -> QCFunction:
    """``y -> f(..., t, ...)`` with ``t`` in slot ``axis``."""
    from .qc import fix

    if f.dim < 2:
        raise ValueError("sections need dimension at least 2")
    if f.exceptional:
        raise InnerNotIntegrable("sections of functions with exceptional sets are not supported", t)
    t = Fraction(t)
    d = f.dim - 1
    pw = f.regular
    i = bisect.bisect_right(pw.cuts[axis], t)
    pieces = {}
    for key, piece in pw.pieces.items():
        if key[axis] != i:
            continue
        pieces[key[:axis] + key[axis + 1:]] = _drop(fix(piece, axis, t), axis, d)
    regular = Piecewise(d, pw.cuts[:axis] + pw.cuts[axis + 1:], pieces, pw.jumps[:axis] + pw.jumps[axis + 1:])
    domain = Rectangle(f.domain.sides[:axis] + f.domain.sides[axis + 1:])

    def exact_eval(p):
        return f.exact_eval(tuple(p[:axis]) + (t,) + tuple(p[axis:]))

    enclose_fn = None
    if f.enclose_fn is not None:
        col = float(t)

        def enclose_fn(lo, hi):
            lo = np.insert(lo, axis, col, axis=1)
            hi = np.insert(hi, axis, col, axis=1)
            return f.enclose_fn(lo, hi)

    tags = f.tags & {"bounded", "nonnegative", "nonpositive", "characteristic"}
    return QCFunction(domain, regular, exact_eval, (), f.bound, frozenset(tags),
                      f"{f.name}|x{axis}={t}", enclose_fn)


# ---------------------------------------------------------------------------
# iterated integrals


def _clip_to_support(f: QCFunction, rect: Rectangle) -> Rectangle | None:
    support = f.support_box()
    if support is None:
        return rect
    sides = []
    for s, t in zip(rect.sides, support.sides):
        lo, hi = max(s.lo, t.lo), min(s.hi, t.hi)
        if hi < lo:
            return None
        sides.append(Interval(lo, hi))
    return Rectangle(tuple(sides))


def _breaks(f: QCFunction, axis: int, a: Fraction, b: Fraction) -> list[Fraction]:
    return [a] + [c for c in f.regular.cuts[axis] if a < c < b] + [b]


def _degree_in(piece: Piece, axis: int) -> int | None:
    """Polynomial degree of ``piece`` in coordinate ``axis`` (None if not polynomial)."""
    if axis not in piece.axes:
        return 0
    if isinstance(piece, Poly):
        return piece.degree
    if isinstance(piece, P.Sum):
        a, b = _degree_in(piece.a, axis), _degree_in(piece.b, axis)
        return None if a is None or b is None else max(a, b)
    if isinstance(piece, P.Prod):
        a, b = _degree_in(piece.a, axis), _degree_in(piece.b, axis)
        return None if a is None or b is None else a + b
    return None


def _column_degree(f: QCFunction, axis: int, t: Fraction) -> int | None:
    """Degree in ``axis`` of all pieces in the column containing ``t``."""
    pw = f.regular
    i = bisect.bisect_right(pw.cuts[axis], t)
    out = 0
    for key, piece in pw.pieces.items():
        if key[axis] == i:
            k = _degree_in(piece, axis)
            if k is None:
                return None
            out = max(out, k)
    return out


def _open_newton_cotes(a: Fraction, b: Fraction, n: int) -> tuple[list[Fraction], list[Fraction]]:
    """Rational nodes at the midpoints of ``n`` equal cells and the weights
    that integrate polynomials of degree below ``n`` exactly."""
    h = (b - a) / n
    xs = [a + h * (2 * i + 1) / 2 for i in range(n)]
    # moments of the monomials (x - a)^k on [a, b]
    moments = [(b - a) ** (k + 1) / (k + 1) for k in range(n)]
    rows = [[(x - a) ** k for x in xs] + [moments[k]] for k in range(n)]
    for c in range(n):
        piv = next(r for r in range(c, n) if rows[r][c] != 0)
        rows[c], rows[piv] = rows[piv], rows[c]
        inv = 1 / rows[c][c]
        rows[c] = [v * inv for v in rows[c]]
        for r in range(n):
            if r != c and rows[r][c] != 0:
                m = rows[r][c]
                rows[r] = [u - m * v for u, v in zip(rows[r], rows[c])]
    return xs, [rows[k][n] for k in range(n)]


def _exact_rule(fn, a: Fraction, b: Fraction, degree: int) -> tuple[Number, Number]:
    xs, ws = _open_newton_cotes(a, b, degree + 1)
    value: Number = Fraction(0)
    err: Number = Fraction(0)
    for x, w in zip(xs, ws):
        v, e = fn(x)
        value += w * v if isinstance(v, Fraction) else float(w) * v
        err += abs(w) * e if isinstance(e, Fraction) else float(abs(w)) * e
    return value, err


def _gauss(fn, a: Fraction, b: Fraction, n: int) -> tuple[float, float]:
    """Gauss-Legendre rule with ``n`` nodes on ``[a, b]``; returns the value
    and the weighted sum of the inner error bounds."""
    x, w = np.polynomial.legendre.leggauss(n)
    half, mid = (b - a) / 2, (a + b) / 2
    total, err = 0.0, 0.0
    for xi, wi in zip(x, w):
        t = mid + half * Fraction(float(xi))
        v, e = fn(t)
        total += float(wi) * float(v)
        err += float(wi) * float(e)
    return float(half) * total, float(half) * err


def _outer_bounded(fn, breaks: Sequence[Fraction], tol: float, degree_at=None,
                   max_nodes: int = 64) -> tuple[Number, Number]:
    total_len = float(breaks[-1] - breaks[0]) or 1.0
    value: Number = Fraction(0)
    error: Number = Fraction(0)
    for a, b in zip(breaks, breaks[1:]):
        if a == b:
            continue
        k = degree_at((a + b) / 2) if degree_at else None
        if k is not None and k <= 12:
            q, e = _exact_rule(fn, a, b, k)
            value, error = value + q, error + e
            continue
        share = tol * float(b - a) / total_len
        n = 4
        q, e = _gauss(fn, a, b, n)
        while True:
            q2, e2 = _gauss(fn, a, b, 2 * n)
            diff = abs(q2 - q)
            n *= 2
            q, e = q2, e2
            if diff <= share or 2 * n > max_nodes:
                break
        value += q
        error += diff + e
    return value, error


def _outer(f: QCFunction, axis: int, side: Interval, fn, tol: float,
           schedule: TruncationSchedule | None) -> IntegralResult:
    """Integral of ``fn`` over ``side``; unbounded sides use a truncation schedule."""
    def degree_at(t):
        return _column_degree(f, axis, t)

    if side.bounded:
        value, err = _outer_bounded(fn, _breaks(f, axis, side.lo, side.hi), tol, degree_at)
        if isinstance(value, float) or isinstance(err, float):
            value, err = float(value), float(err)
        return IntegralResult(value, err)
    if not ({"nonnegative", "nonpositive"} & f.tags):
        raise ValueError("unbounded outer ranges need a sign-definite integrand")
    sign = -1 if "nonpositive" in f.tags and "nonnegative" not in f.tags else 1
    schedule = schedule or TruncationSchedule.dyadic()
    vals, errs = [], []
    acc, acc_err = 0.0, 0.0
    prev = None
    for R, _ in schedule:
        lo = side.lo if not isinstance(side.lo, float) and side.lo >= -R else -R
        hi = side.hi if not isinstance(side.hi, float) and side.hi <= R else R
        lo, hi = Fraction(min(lo, hi)), Fraction(hi)
        pieces = [(lo, hi)] if prev is None else [(lo, prev[0]), (prev[1], hi)]
        for a, b in pieces:
            if b > a:
                v, e = _outer_bounded(fn, _breaks(f, axis, a, b), tol, degree_at)
                acc, acc_err = acc + sign * float(v), acc_err + float(e)
        prev = (lo, hi)
        vals.append(acc)
        errs.append(acc_err)
    lim = _monotone_limit(vals, errs)
    trace = tuple(zip((R for R, _ in schedule), vals))
    if not lim.finite:
        return IntegralResult(sign * math.inf, math.inf, trace, PLUS_INF if sign > 0 else "-inf")
    return IntegralResult(sign * float(lim.limit), float(lim.error), trace)


def _inner_fn(f: QCFunction, axis: int, rect: Rectangle, integrate_section, stages: int, tol: float):
    inner_rect = Rectangle(rect.sides[:axis] + rect.sides[axis + 1:])

    def fn(t):
        g = section_function(f, axis, t).restricted(inner_rect)
        res = integrate_section(g, inner_rect, stages, tol)
        if res.verdict != NUMBER:
            raise InnerNotIntegrable(f"inner integral is {res.verdict} at x{axis}={t}", t)
        return res.value, res.error_bound

    return fn


def _lebesgue_section(g: QCFunction, rect: Rectangle, stages: int, tol: float) -> IntegralResult:
    return integrate(g, rect, stages, tol)


def iterated_integrate(f: QCFunction, order: Sequence[int] | None = None, rect: Rectangle | None = None,
                       tol: float = 1e-8, stages: int = 16,
                       schedule: TruncationSchedule | None = None) -> IntegralResult:
    """Iterated integral of ``f`` over ``rect``.

    ``order`` lists the axes from the innermost integration to the
    outermost; the default integrates axis ``d-1`` first and axis ``0``
    last.
    """
    d = f.dim
    order = tuple(range(d - 1, -1, -1)) if order is None else tuple(order)
    if sorted(order) != list(range(d)):
        raise ValueError(f"order must be a permutation of 0..{d - 1}")
    rect = f.domain if rect is None else rect
    clipped = _clip_to_support(f, rect)
    if clipped is None or clipped.volume == 0:
        return IntegralResult(Fraction(0), Fraction(0))
    if d == 1:
        return integrate(f, clipped, stages, tol, schedule)
    outer = order[-1]
    rest = tuple(k - 1 if k > outer else k for k in order[:-1])

    def integrate_section(g, inner_rect, stages, tol):
        return iterated_integrate(g, rest, inner_rect, tol, stages, schedule)

    fn = _inner_fn(f, outer, clipped, integrate_section, stages, tol)
    return _outer(f, outer, clipped.sides[outer], fn, tol, schedule)


# ---------------------------------------------------------------------------
# Tonelli gate and reduction check


def tonelli_gate(f: QCFunction, rect: Rectangle | None = None, schedule: TruncationSchedule | None = None,
                 axis: int = 0, tol: float = 1e-8, stages: int = 16) -> Summability:
    """Summability of ``f`` from the truncated integrals of ``x -> int f(x, .)``.

    ``x`` is coordinate ``axis``; the inner integral runs over the other
    coordinates at once.  Functions without a nonnegativity tag are
    replaced by their absolute value.
    """
    g = f if "nonnegative" in f.tags else abs_value(f)
    rect = g.domain if rect is None else rect
    clipped = _clip_to_support(g, rect)
    if clipped is None or clipped.volume == 0:
        return Summability(True, Fraction(0), ())
    fn = _inner_fn(g, axis, clipped, _lebesgue_section, stages, tol)
    try:
        res = _outer(g, axis, clipped.sides[axis], fn, tol, schedule)
    except InnerNotIntegrable:
        return Summability(False, math.inf, ())
    values = tuple(v for _, v in res.trace) or (res.value,)
    if res.verdict != NUMBER:
        return Summability(False, math.inf, values)
    return Summability(True, float(res.value) + float(res.error_bound), values)


@dataclass(frozen=True)
class ReductionReport:
    direct: IntegralResult | None
    iterated: dict  # order -> IntegralResult
    gaps: dict  # order -> float
    verdict: str
    summability: Summability | None = None
    notes: tuple = ()

    def as_dict(self) -> dict:
        def res(r):
            if r is None:
                return None
            return {"value": _num(r.value), "errorBound": _num(r.error_bound), "verdict": r.verdict}

        return {
            "direct": res(self.direct),
            "iterated": {"".join(map(str, k)): res(v) for k, v in self.iterated.items()},
            "gaps": {"".join(map(str, k)): _num(v) for k, v in self.gaps.items()},
            "verdict": self.verdict,
            "summable": None if self.summability is None else self.summability.summable,
            "notes": list(self.notes),
        }


def _num(v):
    if isinstance(v, Fraction) or isinstance(v, float) and not math.isfinite(v):
        return format_rational(v)
    return v


def _two_orders(d: int) -> list[tuple]:
    inner_last = tuple(range(d - 1, -1, -1))
    inner_first = tuple(range(d))
    return [inner_last, inner_first] if d > 1 else [inner_last]


def fubini_check(f: QCFunction, rect: Rectangle | None = None, tol: float = 1e-6, stages: int = 16,
                 orders: Sequence[Sequence[int]] | None = None,
                 schedule: TruncationSchedule | None = None) -> ReductionReport:
    """Compare the direct integral with iterated integrals in several orders.

    Raises :class:`NotSummable` (carrying the report) when the Tonelli gate
    rejects ``f``.
    """
    rect = f.domain if rect is None else rect
    orders = [tuple(o) for o in orders] if orders else _two_orders(f.dim)
    gate = tonelli_gate(f, rect, schedule, 0, tol, stages)
    if not gate.summable:
        iterated, notes = {}, ["Tonelli gate: truncated integrals of |f| are unbounded"]
        for o in orders:
            try:
                iterated[o] = iterated_integrate(f, o, rect, tol, stages, schedule)
            except InnerNotIntegrable as exc:
                notes.append(f"order {''.join(map(str, o))}: {exc}")
        report = ReductionReport(None, iterated, {}, NOT_SUMMABLE, gate, tuple(notes))
        raise NotSummable(f"{f.name} is not summable on {rect}", report)
    direct = integrate(f.restricted(rect) if rect != f.domain else f, rect if rect.bounded else None,
                       stages, tol, schedule)
    iterated, gaps = {}, {}
    ok = direct.verdict == NUMBER
    for o in orders:
        r = iterated_integrate(f, o, rect, tol, stages, schedule)
        iterated[o] = r
        if r.verdict != NUMBER or not ok:
            ok = False
            continue
        if isinstance(direct.value, Fraction) and isinstance(r.value, Fraction):
            gap = abs(direct.value - r.value)
        else:
            gap = abs(float(direct.value) - float(r.value))
        gaps[o] = gap
        budget = float(direct.error_bound) + float(r.error_bound) + tol
        ok = ok and gap <= budget
    return ReductionReport(direct, iterated, gaps, PASS if ok else FAIL, gate)


# ---------------------------------------------------------------------------
# section identity for multirectangles


@dataclass(frozen=True)
class SectionReport:
    volume: Fraction
    integral: Fraction
    profile: tuple  # ((a, b, section measure), ...)
    faces: tuple  # skipped coordinates (a null set)
    passed: bool

    def as_dict(self) -> dict:
        return {
            "volume": _num(self.volume),
            "integral": _num(self.integral),
            "profile": [[_num(a), _num(b), _num(m)] for a, b, m in self.profile],
            "faces": [_num(c) for c in self.faces],
            "passed": self.passed,
        }


def section_identity_check(A: Multirectangle, axis: int = 0) -> SectionReport:
    """``lambda_{d+1}(A) = int lambda_d(A_x) dx`` for a bounded finite union.

    The section measure is constant between consecutive face coordinates
    along ``axis``, so the right-hand side is an exact finite sum.
    """
    rects = [r for r in A.components]
    if A.tail:
        raise ValueError("section identity needs a finite union")
    if not rects:
        return SectionReport(Fraction(0), Fraction(0), (), (), True)
    if rects[0].dim < 2:
        raise ValueError("sections need dimension at least 2")
    if not all(r.bounded for r in rects):
        raise ValueError("section identity needs a bounded set")
    faces = sorted({x for r in rects for x in (r.sides[axis].lo, r.sides[axis].hi)})
    profile = []
    total = Fraction(0)
    for a, b in zip(faces, faces[1:]):
        s = section(A, axis, (a + b) / 2)
        m = union_measure(s.rects.components)
        profile.append((a, b, m))
        total += (b - a) * m
    volume = union_measure(rects)
    return SectionReport(volume, total, tuple(profile), tuple(faces), volume == total)
