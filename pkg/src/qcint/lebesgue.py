"""Lebesgue integration of quasi-continuous functions.

Bounded case: the integral is the limit of the integrals of the continuous
functions associated with witnesses of order ``1/n``.  Each associated
function agrees with ``f`` off a set of length ``L(Delta_n)`` and shares the
bound ``M``, so the stage error is at most ``2 M L(Delta_n)`` plus the
quadrature tolerance.  When ``f`` has no jumps inside the box the
associated function does not depend on ``n`` and the error is the
quadrature error alone.

General case: ``int f = int f_+ - int f_-`` where each part is the monotone
limit of truncated integrals over ``(R_j, N_j)``.  Monotonicity in each
variable makes the diagonal limit equal to the joint one.  The limit is
judged from the decay of the last increments (a budgeted verdict).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .qc import DomainMismatch, NotCharacteristic, QCFunction, abs_value, negate, restrict_to_set, truncate
from .quadrature import integrate_piecewise
from .rational import is_infinite
from .sets import (Interval, Multirectangle, Rectangle, UnboundedSet, disjointify_1d, inner_measure_bound,
                   length, outer_measure_bound, union_measure)

Number = Fraction | float

NUMBER, PLUS_INF, MINUS_INF, NOT_INTEGRABLE = "number", "+inf", "-inf", "not-integrable"

DEFAULT_STAGES = 64


class MissingBound(ValueError):
    """Raised when a bounded-case integral is requested for a function
    without a finite bound on the box."""


@dataclass(frozen=True)
class StageRecord:
    n: int
    witness_length: Fraction
    value: Number
    tol: float


@dataclass(frozen=True)
class IntegralResult:
    value: Number
    error_bound: Number
    trace: tuple = ()
    verdict: str = NUMBER

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction) and self.error_bound == 0

    def __float__(self) -> float:
        if self.verdict == PLUS_INF:
            return math.inf
        if self.verdict == MINUS_INF:
            return -math.inf
        if self.verdict == NOT_INTEGRABLE:
            return math.nan
        return float(self.value)


@dataclass(frozen=True)
class TruncationSchedule:
    """Pairs ``(R_j, N_j)``; the default is ``R_j = N_j = 2**j``."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple((Fraction(r), Fraction(n)) for r, n in self.pairs)
        if not pairs:
            raise ValueError("empty schedule")
        for (r0, n0), (r1, n1) in zip(pairs, pairs[1:]):
            if r1 < r0 or n1 < n0:
                raise ValueError("schedule must be monotone")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def dyadic(cls, levels: int = 12) -> "TruncationSchedule":
        return cls(tuple((2 ** j, 2 ** j) for j in range(levels + 1)))

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


# ---------------------------------------------------------------------------
# bounded case


def _sup_abs(f: QCFunction, box: Rectangle) -> Fraction | None:
    lo = np.array([[float(s.lo) for s in box.sides]])
    hi = np.array([[float(s.hi) for s in box.sides]])
    a, b = f.enclose(lo, hi)
    m = max(abs(float(a[0])), abs(float(b[0])))
    if not math.isfinite(m):
        return None
    return Fraction(m)


def _bound_on(f: QCFunction, box: Rectangle) -> Fraction:
    declared = f.bound
    found = _sup_abs(f, box)
    candidates = [Fraction(c) for c in (declared, found) if c is not None]
    if not candidates:
        raise MissingBound(f"no finite bound for {f.name} on {box}")
    return min(candidates)


def _stage_list(stages: int) -> list[int]:
    """Stages actually evaluated: powers of two up to ``stages`` and ``stages`` itself."""
    out, n = [], 1
    while n < stages:
        out.append(n)
        n *= 2
    out.append(stages)
    return out


def _within(box: Rectangle, domain: Rectangle) -> bool:
    return all(d.lo <= b.lo and b.hi <= d.hi for b, d in zip(box.sides, domain.sides))


def integrate_bounded(f: QCFunction, R: Rectangle | None = None, stages: int = DEFAULT_STAGES,
                      riemann_tol: float = 1e-8) -> IntegralResult:
    """Integral of a bounded function over a bounded box.

    The value comes from the associated function of order ``1/stages``;
    the trace lists the stages evaluated along the way.
    """
    box = f.domain if R is None else R
    if box.dim != f.dim:
        raise DomainMismatch("box and function dimensions differ")
    if not box.bounded:
        raise UnboundedSet("integrate_bounded needs a bounded box")
    if not _within(box, f.domain):
        raise DomainMismatch(f"{box} is not contained in the domain of {f.name}")
    if stages < 1:
        raise ValueError("stages must be >= 1")
    if box.volume == 0:
        return IntegralResult(Fraction(0), Fraction(0), (), NUMBER)
    M = _bound_on(f, box)
    tol = float(riemann_tol)
    bbox = (tuple(s.lo for s in box.sides), tuple(s.hi for s in box.sides))
    trace: list[StageRecord] = []
    stationary = f.stationary_on(box)
    cached = None
    value: Number = Fraction(0)
    err = 0.0
    w = None
    for n in _stage_list(stages):
        if stationary and cached is not None:
            w = f.witness(Fraction(1, n), box)
            value, err = cached
        else:
            w, g = f.associated(Fraction(1, n), box)
            value, err = integrate_piecewise(g, bbox, tol)
            if stationary:
                cached = (value, err)
        trace.append(StageRecord(n, w.length, value, err))
    if stationary:
        bound: Number = Fraction(0) if err == 0 else err
    else:
        stage_err = 2 * M * w.length
        bound = stage_err if err == 0 else float(stage_err) + err
    return IntegralResult(value, bound, tuple(trace), NUMBER)


# ---------------------------------------------------------------------------
# general case


def _clip_box(domain: Rectangle, R: Fraction, support: Rectangle | None) -> Rectangle | None:
    sides = []
    for k, s in enumerate(domain.sides):
        lo, hi = max(s.lo, -R), min(s.hi, R)
        if support is not None:
            lo, hi = max(lo, support.sides[k].lo), min(hi, support.sides[k].hi)
        if hi < lo:
            return None
        sides.append(Interval(Fraction(lo), Fraction(hi)))
    return Rectangle(tuple(sides))


@dataclass(frozen=True)
class MonotoneLimit:
    """Limit of a nondecreasing sequence of truncated integrals."""

    values: tuple
    limit: Number
    tail: Number
    error: Number
    finite: bool


def _monotone_limit(values: Sequence[Number], errors: Sequence[Number]) -> MonotoneLimit:
    vals = list(values)
    last = vals[-1]
    err = errors[-1]
    inc = [b - a for a, b in zip(vals, vals[1:])]
    if not inc or all(d == 0 for d in inc[-2:]):
        return MonotoneLimit(tuple(vals), last, Fraction(0), err, True)
    tail_inc = [float(d) for d in inc[-3:]]
    ratios = [b / a if a > 0 else (0.0 if b <= 0 else math.inf) for a, b in zip(tail_inc, tail_inc[1:])]
    r = max(ratios) if ratios else math.inf
    if r <= 0.75:
        # geometric tail of the increments
        tail = max(tail_inc[-1], 0.0) * r / (1 - r)
        return MonotoneLimit(tuple(vals), float(last) + tail, tail, float(err) + tail, True)
    if all(abs(float(d)) <= 1e-12 * (1 + abs(float(last))) + float(e) for d, e in zip(inc[-2:], errors[-2:])):
        return MonotoneLimit(tuple(vals), last, Fraction(0), err, True)
    return MonotoneLimit(tuple(vals), math.inf, math.inf, math.inf, False)


def _part_integrals(f: QCFunction, schedule: TruncationSchedule, stages: int, tol: float,
                    sign: int) -> tuple[list[Number], list[Number], list]:
    """Truncated integrals of ``f_+`` (sign=+1) or ``f_-`` (sign=-1)."""
    g = f if sign > 0 else negate(f)
    if sign > 0 and "nonpositive" in f.tags or sign < 0 and "nonnegative" in f.tags:
        zeros = [Fraction(0)] * len(schedule)
        return zeros, zeros, []
    support = f.support_box()
    positive = truncate(g, "plus", 0)
    vals: list[Number] = []
    errs: list[Number] = []
    traces = []
    prev_box = None
    bound = f.bound
    for R, N in schedule:
        box = _clip_box(f.domain, R, support)
        if box is None or box.volume == 0:
            vals.append(Fraction(0))
            errs.append(Fraction(0))
            continue
        inactive = bound is not None and N >= bound
        if vals and box == prev_box and inactive and prev_inactive:
            vals.append(vals[-1])
            errs.append(errs[-1])
            continue
        part = truncate(positive, "minus", N)
        res = integrate_bounded(part, box, stages, tol)
        vals.append(res.value)
        errs.append(res.error_bound)
        traces.append((R, N, res))
        prev_box, prev_inactive = box, inactive
    return vals, errs, traces


def integrate_general(f: QCFunction, schedule: TruncationSchedule | None = None,
                      stages: int = 16, riemann_tol: float = 1e-8) -> IntegralResult:
    """``int f_+ - int f_-`` with each part a monotone limit over the schedule."""
    schedule = schedule or TruncationSchedule.dyadic()
    pv, pe, ptrace = _part_integrals(f, schedule, stages, riemann_tol, +1)
    mv, me, mtrace = _part_integrals(f, schedule, stages, riemann_tol, -1)
    plus = _monotone_limit(pv, pe)
    minus = _monotone_limit(mv, me)
    trace = tuple(r for _, _, res in ptrace + mtrace for r in res.trace[-1:])
    if plus.finite and minus.finite:
        value = plus.limit - minus.limit
        err = plus.error + minus.error
        if isinstance(value, float) or isinstance(err, float):
            value, err = float(value), float(err)
        return IntegralResult(value, err, trace, NUMBER)
    if plus.finite:
        return IntegralResult(-math.inf, math.inf, trace, MINUS_INF)
    if minus.finite:
        return IntegralResult(math.inf, math.inf, trace, PLUS_INF)
    return IntegralResult(math.nan, math.inf, trace, NOT_INTEGRABLE)


def integrate(f: QCFunction, R: Rectangle | None = None, stages: int = DEFAULT_STAGES,
              riemann_tol: float = 1e-8, schedule: TruncationSchedule | None = None) -> IntegralResult:
    """Bounded path when it applies, general path otherwise."""
    box = f.domain if R is None else R
    if box.bounded and (f.bound is not None or _sup_abs(f, box) is not None):
        return integrate_bounded(f, box, stages, riemann_tol)
    g = f if R is None else f.restricted(_intersect(f.domain, R))
    return integrate_general(g, schedule, min(stages, 16), riemann_tol)


def _intersect(a: Rectangle, b: Rectangle) -> Rectangle:
    sides = []
    for s, t in zip(a.sides, b.sides):
        lo, hi = max(s.lo, t.lo), min(s.hi, t.hi)
        if hi < lo:
            raise DomainMismatch("empty intersection")
        sides.append(Interval(lo, hi))
    return Rectangle(tuple(sides))


def integrate_over_set(f: QCFunction, A: QCFunction, schedule: TruncationSchedule | None = None,
                       stages: int = 16, riemann_tol: float = 1e-8) -> IntegralResult:
    """``int_A f = int f 1_A``."""
    if not A.characteristic:
        raise NotCharacteristic(f"{A.name} is not a characteristic function")
    g = restrict_to_set(f, A)
    support = g.support_box()
    if support is not None and support.volume == 0 and not g.exceptional:
        return IntegralResult(Fraction(0), Fraction(0), (), NUMBER)
    if support is not None and g.bound is not None:
        return integrate_bounded(g, support, stages, riemann_tol)
    return integrate_general(g, schedule, stages, riemann_tol)


# ---------------------------------------------------------------------------
# measure and summability


def measure(A) -> Number:
    """Lebesgue measure of a multirectangle or characteristic descriptor."""
    if isinstance(A, Multirectangle):
        return union_measure(A)
    if isinstance(A, Rectangle):
        return A.volume
    if isinstance(A, QCFunction):
        if not A.characteristic:
            raise NotCharacteristic(f"{A.name} is not a characteristic function")
        res = integrate_general(A)
        if res.verdict != NUMBER:
            return math.inf
        return res.value
    raise TypeError(f"cannot measure {A!r}")


@dataclass(frozen=True)
class Summability:
    summable: bool
    bound: Number
    values: tuple


def is_summable(f: QCFunction, schedule: TruncationSchedule | None = None, stages: int = 16) -> Summability:
    """Check that the truncated integrals of ``|f|`` stay bounded along the schedule."""
    schedule = schedule or TruncationSchedule.dyadic()
    g = f if "nonnegative" in f.tags else abs_value(f)
    vals, errs, _ = _part_integrals(g, schedule, stages, 1e-8, +1)
    lim = _monotone_limit(vals, errs)
    if not lim.finite:
        return Summability(False, math.inf, tuple(vals))
    bound = lim.limit + lim.error
    return Summability(True, bound, tuple(vals))


# ---------------------------------------------------------------------------
# absolute continuity


@dataclass(frozen=True)
class ProbeRow:
    measure: Fraction
    integral: Number
    error_bound: Number

    @property
    def ratio(self) -> float:
        return float(abs(self.integral)) / float(self.measure) if self.measure else math.nan


@dataclass(frozen=True)
class ProbeTable:
    rows: tuple
    bound: Fraction | None
    bounded_check: bool | None


def random_open_sets(count: int, seed: int = 0, box: Interval = Interval(Fraction(0), Fraction(1)),
                     pieces: int = 3) -> list[Multirectangle]:
    """Open rational multiintervals inside ``box`` with total length about ``2**-k``."""
    rng = random.Random(seed)
    width = box.hi - box.lo
    out = []
    for k in range(1, count + 1):
        total = width / 2 ** k
        comps = []
        for _ in range(pieces):
            ln = total / pieces * Fraction(rng.randint(1, 64), 64)
            start = box.lo + (width - ln) * Fraction(rng.randint(0, 1024), 1024)
            comps.append(Rectangle.of(Interval.open(start, start + ln)))
        out.append(Multirectangle.of(*comps))
    return out


def abs_continuity_probe(f: QCFunction, trials: Sequence[Multirectangle] | None = None,
                         seed: int = 0, count: int = 8, stages: int = 16) -> ProbeTable:
    """Table of ``(lambda(O), int_O f)`` over shrinking open sets ``O``.

    For bounded ``f`` every row is checked against ``|int_O f| <= M lambda(O)``.
    """
    from .catalog import indicator

    if trials is None:
        side = f.domain.sides[0]
        lo = side.lo if not is_infinite(side.lo) else Fraction(0)
        hi = side.hi if not is_infinite(side.hi) else lo + 1
        trials = random_open_sets(count, seed, Interval(lo, hi))
    M = f.bound
    if M is None and f.domain.bounded:
        try:
            M = _bound_on(f, f.domain)
        except MissingBound:
            M = None
    rows = []
    ok = True
    for O in trials:
        lam = union_measure(O)
        res = integrate_over_set(f, indicator(O), stages=stages)
        rows.append(ProbeRow(lam, res.value, res.error_bound))
        if M is not None:
            ok = ok and abs(res.value) <= M * lam + res.error_bound
    return ProbeTable(tuple(rows), M, ok if M is not None else None)


# ---------------------------------------------------------------------------
# exterior and interior measure


def _cells(E: Multirectangle, R: Rectangle, inside: bool) -> Multirectangle:
    """Closed grid cells of ``R`` (on the grid of all endpoints) lying in
    ``E`` (``inside=True``) or outside it: an almost-disjoint family."""
    import itertools

    d = R.dim
    rects = [c for c in E.components]
    axes = []
    for k in range(d):
        pts = {R.sides[k].lo, R.sides[k].hi}
        for r in rects:
            for v in (r.sides[k].lo, r.sides[k].hi):
                if R.sides[k].lo < v < R.sides[k].hi:
                    pts.add(v)
        axes.append(sorted(pts))
    out = []
    for idx in itertools.product(*(range(len(a) - 1) for a in axes)):
        lo = [axes[k][i] for k, i in enumerate(idx)]
        hi = [axes[k][i + 1] for k, i in enumerate(idx)]
        if any(h == l for l, h in zip(lo, hi)):
            continue
        mid = tuple((l + h) / 2 for l, h in zip(lo, hi))
        hit = any(r.contains(mid) for r in rects)
        if hit == inside:
            out.append(Rectangle(tuple(Interval(l, h) for l, h in zip(lo, hi))))
    return Multirectangle.of(*out)


def _exterior(cells: Multirectangle, eps: Fraction) -> tuple[Fraction, Fraction]:
    if not cells.components:
        return Fraction(0), Fraction(0)
    cover = outer_measure_bound(cells, eps)
    up = length(cover)
    return max(Fraction(0), up - eps), up


@dataclass(frozen=True)
class MeasureBrackets:
    exterior: tuple
    interior: tuple


def exterior_interior_measure(E: Multirectangle, R: Rectangle, eps) -> MeasureBrackets:
    """Brackets of width at most ``eps`` for the exterior and interior measures."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not R.bounded:
        raise UnboundedSet("the reference box must be bounded")
    for c in E.components:
        if not all(s.lo <= c.sides[k].lo and c.sides[k].hi <= s.hi for k, s in enumerate(R.sides)):
            raise DomainMismatch("E must lie inside R")
    if not E.components:
        zero = (Fraction(0), Fraction(0))
        return MeasureBrackets(zero, zero)
    inside = _cells(E, R, True)
    outside = _cells(E, R, False)
    me = _exterior(inside, eps)
    mc = _exterior(outside, eps)
    vol = R.volume
    mi = (max(Fraction(0), vol - mc[1]), vol - mc[0])
    return MeasureBrackets(me, mi)
