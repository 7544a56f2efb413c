"""Almost-uniform convergence witnesses and convergence-theorem checkers.

For a sequence ``f_n`` and a tail index ``m``

    v_{n,m}(x) = max{|f_{m+r}(x) - f_{m+s}(x)| : 1 <= r, s <= n},
    w_m(x)     = sup_n v_{n,m}(x),

so ``f_n -> f`` uniformly on a set exactly when ``w_m -> 0`` uniformly
there.  All suprema are over finite caps and are lower bounds of the true
ones; verdicts are sampled evidence, not proofs.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import lebesgue as leb
from .qc import QCFunction, QCSequence, UnitRationals, combine, abs_value
from .rational import is_infinite
from .sets import CountableCover, Interval, Multirectangle, Rectangle, Topology, merge_1d, union_measure


class UnboundedDomain(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


class HypothesisViolated(ValueError):
    def __init__(self, message: str, report: "ConvergenceReport"):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# sampling helpers


def _points(domain: Rectangle, size: int, extra: Sequence = ()) -> list[Fraction]:
    side = domain.sides[0]
    lo, hi = side.lo, side.hi
    if is_infinite(lo) or is_infinite(hi):
        raise UnboundedDomain("sampling needs a bounded interval")
    pts = {lo + (hi - lo) * Fraction(j, size) for j in range(size + 1)}
    pts |= {Fraction(c) for c in extra if lo <= c <= hi}
    return sorted(p for p in pts if side.contains(p))


def sample(f: QCFunction, pts: Sequence[Fraction]) -> np.ndarray:
    """Values of the true function at rational points (floats).

    Evaluation is in floats except at cut points and exceptional points,
    where the exact evaluator decides.
    """
    xf = np.array([float(p) for p in pts])
    vals = np.asarray(f.values(xf), dtype=float).reshape(-1)
    index = {p: i for i, p in enumerate(pts)}
    special = set()
    for c in f.regular.cuts[0]:
        if c in index:
            special.add(index[c])
    for exc in f.exceptional:
        if isinstance(exc, UnitRationals):
            special.update(range(len(pts)))
        else:
            for v, _ in getattr(exc, "values", ()):
                if v in index:
                    special.add(index[v])
    for i in special:
        p = pts[i]
        if f.domain.contains((p,)):
            vals[i] = float(f.exact_eval((p,)))
    return vals


def sampled_indices(start: int, cap: int, dense: int = 64, growth: float = 1.1) -> list[int]:
    """All indices up to ``start + dense``, then geometric steps up to ``cap``."""
    out = list(range(start, min(cap, start + dense) + 1))
    n = out[-1]
    while n < cap:
        n = min(cap, max(n + 1, int(n * growth)))
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# w_m on a grid


@dataclass(frozen=True)
class WmGrid:
    grid: tuple
    m: int
    n_cap: int
    values: tuple

    def at(self, x) -> Fraction:
        return self.values[self.grid.index(Fraction(x))]


def wm_grid(seq: QCSequence, m: int, n_cap: int, grid: Sequence) -> WmGrid:
    """Exact ``v_{n_cap, m}`` (``r, s`` in ``1..n_cap``) at each grid point."""
    if n_cap < 1 or m < 0:
        raise ValueError("need n_cap >= 1 and m >= 0")
    grid = tuple(Fraction(x) for x in grid)
    members = [seq(k) for k in range(max(m + 1, seq.start), m + n_cap + 1)]
    out = []
    for x in grid:
        vals = [Fraction(f.exact_eval((x,))) for f in members]
        out.append(max(vals) - min(vals) if vals else Fraction(0))
    return WmGrid(grid, m, n_cap, tuple(out))


# ---------------------------------------------------------------------------
# Egorov witness


@dataclass(frozen=True)
class EgorovLevel:
    eta: Fraction
    budget: Fraction
    m: int
    runs: tuple


@dataclass(frozen=True)
class TableRow:
    sigma: Fraction
    M: int | None
    sup: float
    passed: bool


@dataclass(frozen=True)
class EgorovWitness:
    eps: Fraction
    O: Multirectangle
    levels: tuple
    table: tuple
    n_cap: int

    @property
    def length(self) -> Fraction:
        return union_measure(Multirectangle(self.O.components)) + sum(
            (c.length for c in self.O.tail), Fraction(0))

    @property
    def passed(self) -> bool:
        return self.length < self.eps and all(r.passed for r in self.table)

    def rows(self, sigmas: Sequence) -> tuple:
        want = {Fraction(s) for s in sigmas}
        return tuple(r for r in self.table if r.sigma in want)


def _runs(mask: np.ndarray, pts: Sequence[Fraction], side: Interval) -> list[Interval]:
    """Maximal runs of marked points, each widened to the neighbouring points."""
    out = []
    n = len(pts)
    i = 0
    step = (side.hi - side.lo) / max(n - 1, 1)
    while i < n:
        if not mask[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and mask[j + 1]:
            j += 1
        a = pts[i - 1] if i > 0 else pts[0] - step
        b = pts[j + 1] if j + 1 < n else pts[-1] + step
        out.append(Interval.open(a, b))
        i = j + 1
    return out


def _clipped_length(ivs: Sequence[Interval], side: Interval) -> Fraction:
    total = Fraction(0)
    for iv in merge_1d(ivs):
        lo, hi = max(iv.lo, side.lo), min(iv.hi, side.hi)
        if hi > lo:
            total += hi - lo
    return total


def egorov_witness(seq: QCSequence, eps, sigmas: Sequence = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8),
                                                              Fraction(1, 16)),
                   limit: QCFunction | None = None, grid_size: int = 1024, n_cap: int = 1 << 14,
                   levels: int = 6) -> EgorovWitness:
    """Open ``O`` with ``L(O) < eps`` off which the sampled convergence is uniform.

    Level ``k`` uses the threshold ``eta_k / 2`` with ``eta_k = 2**-k`` and
    the budget ``eps / 2**(k+1)``; the levels do not depend on ``sigmas``.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    dom = seq.domain
    if dom.dim != 1:
        raise ValueError("egorov_witness works on intervals")
    if not dom.bounded:
        raise UnboundedDomain(f"{seq.name} lives on an unbounded domain; almost-uniform convergence can fail")
    f = limit or seq.limit
    if f is None:
        raise ValueError("the pointwise limit is required")
    side = dom.sides[0]
    indices = sampled_indices(seq.start, n_cap)
    members = [seq(k) for k in indices]
    tail: tuple = ()
    budget = eps / 2
    rational_pts = _points(dom, grid_size, f.regular.cuts[0])
    dense = any(isinstance(e, UnitRationals) for g in members + [f] for e in g.exceptional)
    if dense or f.exceptional and any(g.exceptional for g in members):
        # members differ from their regular parts on countable sets of
        # rationals: cover all rationals and sample irrational stand-ins
        cover = UnitRationals(False).cover(eps / 2)
        tail = cover.tail
        budget = eps / 4
        phi = (math.sqrt(5) - 1) / 2
        lo, hi = float(side.lo), float(side.hi)
        fpts = [lo + (hi - lo) * (j + phi) / grid_size for j in range(grid_size)]
        pts = [Fraction(x) for x in fpts]
        F = np.array([np.asarray(g.values(np.array(fpts)), float).reshape(-1) for g in members])
        flim = np.asarray(f.values(np.array(fpts)), float).reshape(-1)
    else:
        pts = rational_pts
        F = np.array([sample(g, pts) for g in members])
        flim = sample(f, pts)
    # suffix extremes, the limit included: w[i] bounds w_m for m = indices[i] - 1
    smax = np.maximum.accumulate(F[::-1], axis=0)[::-1]
    smin = np.minimum.accumulate(F[::-1], axis=0)[::-1]
    w = np.maximum(smax, flim) - np.minimum(smin, flim)
    found = []
    comps: list[Interval] = []
    for k in range(1, levels + 1):
        eta = Fraction(1, 2 ** k)
        gamma = budget / 2 ** k
        chosen = None
        for i in range(len(indices)):
            runs = _runs(w[i] > float(eta) / 2, pts, side)
            if _clipped_length(runs, side) < gamma:
                chosen = (i, runs)
                break
        if chosen is None:
            raise BudgetExceeded(f"level {k}: no tail index up to {n_cap} meets the budget {gamma}")
        i, runs = chosen
        found.append(EgorovLevel(eta, gamma, indices[i] - 1, tuple(runs)))
        comps.extend(runs)
    merged = [Interval.open(max(iv.lo, side.lo - 1), iv.hi) for iv in merge_1d(comps)]
    O = Multirectangle(tuple(Rectangle.of(iv) for iv in merged), tail)
    inside = np.array([any(iv.contains(p) for iv in merged) for p in pts], dtype=bool)
    outside = ~inside
    D = np.abs(F - flim)[:, outside] if outside.any() else np.zeros((len(indices), 0))
    table = []
    for s in sorted({Fraction(x) for x in sigmas}, reverse=True):
        bad = (D >= float(s)).any(axis=1) if D.shape[1] else np.zeros(len(indices), dtype=bool)
        last_bad = np.flatnonzero(bad)
        if len(last_bad) == 0:
            i0 = 0
        elif last_bad[-1] + 1 < len(indices):
            i0 = int(last_bad[-1]) + 1
        else:
            i0 = None
        M = indices[i0] if i0 is not None else None
        sup = float(D[i0:].max()) if i0 is not None and D.shape[1] else 0.0
        table.append(TableRow(s, M, sup, M is not None and M <= n_cap // 4))
    wit = EgorovWitness(eps, O, tuple(found), tuple(table), n_cap)
    if not wit.length < eps:
        raise BudgetExceeded(f"L(O) = {wit.length} is not below {eps}")
    return wit


# ---------------------------------------------------------------------------
# convergence theorems


@dataclass
class ConvergenceReport:
    law: str
    indices: tuple = ()
    integrals: tuple = ()
    limit_of_integrals: float | Fraction | None = None
    integral_of_limit: float | Fraction | None = None
    gap: float | Fraction | None = None
    error: float | Fraction = 0
    passed: bool = False
    violation: dict | None = None
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "law": self.law, "indices": list(self.indices), "integrals": list(self.integrals),
            "limit_of_integrals": self.limit_of_integrals, "integral_of_limit": self.integral_of_limit,
            "gap": self.gap, "error": self.error, "passed": self.passed, "violation": self.violation,
            "notes": list(self.notes),
        }


def dyadic_indices(start: int, top_exp: int) -> list[int]:
    return sorted({start} | {2 ** k for k in range(top_exp + 1) if 2 ** k >= start})


def _grid_for(seq: QCSequence, members: Sequence[QCFunction], size: int = 512) -> list[Fraction]:
    dom = seq.domain
    side = dom.sides[0]
    lo = side.lo if not is_infinite(side.lo) else Fraction(-4)
    hi = side.hi if not is_infinite(side.hi) else Fraction(4)
    cuts = set()
    for g in members:
        cs = g.regular.cuts[0]
        cuts.update(cs)
        cuts.update((a + b) / 2 for a, b in zip(cs, cs[1:]))
    lo = min([lo] + [c for c in cuts if side.contains(c)])
    hi = max([hi] + [c for c in cuts if side.contains(c)])
    pts = {lo + (hi - lo) * Fraction(j, size) for j in range(size + 1)} | cuts
    return sorted(p for p in pts if side.contains(p))


def _integrals(members, stages: int) -> tuple[list, list]:
    vals, errs = [], []
    for g in members:
        r = leb.integrate(g, stages=stages)
        if r.verdict != leb.NUMBER:
            vals.append(float(r))
            errs.append(math.inf)
        else:
            vals.append(r.value)
            errs.append(r.error_bound)
    return vals, errs


def _integral_of(f: QCFunction, stages: int):
    r = leb.integrate(f, stages=stages)
    if r.verdict != leb.NUMBER:
        return float(r), math.inf
    return r.value, r.error_bound


def _num(x):
    return x if isinstance(x, Fraction) else float(x)


def check_monotone(seq: QCSequence, top_exp: int = 10, stages: int = 16, tol: float = 1e-6) -> ConvergenceReport:
    """Monotone convergence: nonnegative increasing ``f_n`` give ``lim int f_n = int lim f_n``."""
    idx = dyadic_indices(seq.start, top_exp)
    pairs = sorted({(n, n + 1) for n in idx} | set(zip(idx, idx[1:])))
    needed = sorted({n for p in pairs for n in p})
    members = {n: seq(n) for n in needed}
    grid = _grid_for(seq, list(members.values()))
    vals = {n: sample(g, grid) for n, g in members.items()}
    report = ConvergenceReport("monotone", tuple(idx))
    for n in needed:
        neg = np.flatnonzero(vals[n] < 0)
        if len(neg):
            x = grid[int(neg[0])]
            report.violation = {"kind": "negative", "n": n, "x": x, "value": float(vals[n][neg[0]])}
            raise HypothesisViolated(f"f_{n}({x}) < 0", report)
    for a, b in pairs:
        dec = np.flatnonzero(vals[b] < vals[a])
        if len(dec):
            i = int(dec[0])
            report.violation = {"kind": "not increasing", "n": a, "next": b, "x": grid[i],
                                "values": (float(vals[a][i]), float(vals[b][i]))}
            raise HypothesisViolated(f"f_{b}({grid[i]}) < f_{a}({grid[i]}): the sequence is not increasing", report)
    ints, errs = _integrals([members[n] if n in members else seq(n) for n in idx], stages)
    report.integrals = tuple(_num(v) for v in ints)
    lim = leb._monotone_limit(ints, errs)
    if seq.limit is None:
        raise ValueError("the pointwise limit is required")
    il, ie = _integral_of(seq.limit, stages)
    report.limit_of_integrals = _num(lim.limit)
    report.integral_of_limit = _num(il)
    if not lim.finite:
        report.gap = math.inf if math.isfinite(float(il)) else 0.0
        report.passed = not math.isfinite(float(il))
        return report
    gap = abs(lim.limit - il) if isinstance(lim.limit, Fraction) and isinstance(il, Fraction) else abs(
        float(lim.limit) - float(il))
    report.gap = gap
    report.error = float(lim.error) + float(ie) + tol
    report.passed = float(gap) <= report.error
    return report


def envelope(members: Sequence[QCFunction]) -> QCFunction:
    out = None
    for g in members:
        a = g if "nonnegative" in g.tags else abs_value(g)
        out = a if out is None else combine("max", out, a)
    return out


def check_dominated(seq: QCSequence, g: QCFunction | None = None, top_exp: int = 20, stages: int = 16,
                    tol: float = 1e-6) -> ConvergenceReport:
    """Dominated convergence; the default dominator is the envelope of the sampled members."""
    idx = dyadic_indices(seq.start, top_exp)
    members = [seq(n) for n in idx]
    report = ConvergenceReport("dominated", tuple(idx))
    ints, errs = _integrals(members, stages)
    report.integrals = tuple(_num(v) for v in ints)
    if seq.limit is not None:
        il, ie = _integral_of(seq.limit, stages)
        report.integral_of_limit = _num(il)
        tailv = ints[-1]
        report.limit_of_integrals = _num(tailv)
        report.gap = abs(tailv - il) if isinstance(tailv, Fraction) and isinstance(il, Fraction) else abs(
            float(tailv) - float(il))
        report.error = float(errs[-1]) + float(ie) + tol
    if g is None:
        prefix = []
        env = None
        for f in members:
            a = f if "nonnegative" in f.tags else abs_value(f)
            env = a if env is None else combine("max", env, a)
            prefix.append(leb.integrate(env, stages=stages))
        values = [float(r) for r in prefix]
        report.notes.append({"envelope_integrals": values})
        finite = all(math.isfinite(v) for v in values)
        lim = leb._monotone_limit(values, [0.0] * len(values)) if finite else None
        if lim is None or not lim.finite:
            report.violation = {"kind": "no summable dominator",
                                "envelope_integrals": values}
            raise HypothesisViolated("the envelope of the sequence is not summable", report)
    else:
        grid = _grid_for(seq, members)
        gv = sample(g, grid)
        for n, f in zip(idx, members):
            fv = np.abs(sample(f, grid))
            bad = np.flatnonzero(fv > gv + 1e-12)
            if len(bad):
                x = grid[int(bad[0])]
                report.violation = {"kind": "not dominated", "n": n, "x": x}
                raise HypothesisViolated(f"|f_{n}({x})| exceeds the dominator", report)
        summ = leb.is_summable(g)
        if not summ.summable:
            report.violation = {"kind": "dominator not summable"}
            raise HypothesisViolated(f"{g.name} is not summable", report)
    if report.gap is None:
        raise ValueError("the pointwise limit is required")
    report.passed = float(report.gap) <= report.error
    return report


def liminf_function(seq: QCSequence, N: int, window: int = 4) -> QCFunction:
    """``min`` of the members in ``N .. N+window-1`` and ``2N, 4N``: an upper
    estimate of ``inf_{n >= N} f_n``."""
    picks = sorted(set(range(N, N + window)) | {2 * N, 4 * N})
    out = None
    for n in picks:
        f = seq(n)
        out = f if out is None else combine("min", out, f)
    return out


def fatou_gap(seq: QCSequence, top_exp: int = 10, stages: int = 16, window: int = 4) -> ConvergenceReport:
    """``liminf int f_n - int liminf f_n`` for nonnegative ``f_n``."""
    idx = dyadic_indices(seq.start, top_exp)
    N = idx[-1]
    tail_idx = sorted(set(idx[len(idx) // 2:]) | set(range(N, N + window)))
    members = [seq(n) for n in tail_idx]
    report = ConvergenceReport("fatou", tuple(tail_idx))
    grid = _grid_for(seq, members)
    for n, f in zip(tail_idx, members):
        neg = np.flatnonzero(sample(f, grid) < 0)
        if len(neg):
            report.violation = {"kind": "negative", "n": n, "x": grid[int(neg[0])]}
            raise HypothesisViolated(f"f_{n} takes negative values", report)
    ints, errs = _integrals(members, stages)
    report.integrals = tuple(_num(v) for v in ints)
    k = min(range(len(ints)), key=lambda i: float(ints[i]))
    liminf_int, lerr = ints[k], errs[k]
    lower = seq.limit if seq.limit is not None else liminf_function(seq, N, window)
    il, ie = _integral_of(lower, stages)
    report.limit_of_integrals = _num(liminf_int)
    report.integral_of_limit = _num(il)
    if isinstance(liminf_int, Fraction) and isinstance(il, Fraction):
        report.gap = liminf_int - il
    elif math.isinf(float(liminf_int)) and math.isinf(float(il)):
        report.gap = 0.0
        report.notes.append("both sides are +inf")
    else:
        report.gap = float(liminf_int) - float(il)
    report.error = 0.0 if math.isinf(float(il)) else float(lerr) + float(ie)
    report.passed = float(report.gap) >= -report.error - 1e-12
    return report
