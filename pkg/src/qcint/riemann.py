"""Darboux sums, Riemann integration, oscillation and the Dini test.

Cell extrema come from certified enclosures of the true function
(:meth:`QCFunction.enclose`), which account for exceptional sets such as
the rationals of the Dirichlet function.  ``riemann_integrate`` sharpens
each cell bracket with the midpoint estimate of :mod:`qcint.quadrature`
when the function is a single smooth piece on the cell; it never uses
closed-form integrals, so it is an independent route from
:mod:`qcint.lebesgue`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .qc import QCFunction
from .quadrature import cell_brackets
from .sets import Interval, Multirectangle, Rectangle, length


class UnboundedFunction(ValueError):
    pass


class NotRiemannIntegrable(ValueError):
    def __init__(self, message: str, gap: float, levels: int):
        super().__init__(message)
        self.gap = gap
        self.levels = levels


@dataclass(frozen=True)
class Partition:
    points: tuple

    def __post_init__(self):
        pts = tuple(Fraction(p) for p in self.points)
        if len(pts) < 2 or any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("partition points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def equispaced(cls, h, k, n: int) -> "Partition":
        h, k = Fraction(h), Fraction(k)
        return cls(tuple(h + Fraction(i, n) * (k - h) for i in range(n + 1)))

    def refined(self, extra: Sequence) -> "Partition":
        lo, hi = self.points[0], self.points[-1]
        return Partition(tuple(sorted(set(self.points) | {Fraction(x) for x in extra if lo < x < hi})))

    @property
    def mesh(self) -> Fraction:
        return max(b - a for a, b in zip(self.points, self.points[1:]))

    @property
    def lengths(self) -> list[Fraction]:
        return [b - a for a, b in zip(self.points, self.points[1:])]

    def __len__(self) -> int:
        return len(self.points) - 1


@dataclass(frozen=True)
class DarbouxPair:
    I_minus: float
    I_plus: float
    m: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    partition: Partition = field(repr=False)

    @property
    def gap(self) -> float:
        return self.I_plus - self.I_minus


def _interval_of(domain) -> Interval:
    if isinstance(domain, Interval):
        return domain
    if isinstance(domain, Rectangle):
        if domain.dim != 1:
            raise ValueError("Riemann routines work on intervals")
        return domain.sides[0]
    return Rectangle.parse(domain).sides[0]


def cell_extrema(f: QCFunction, part: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Certified ``(m_i, M_i)`` of the true function on each closed cell."""
    pts = np.array([float(p) for p in part.points])
    lo, hi = pts[:-1, None], pts[1:, None]
    m, M = f.enclose(lo, hi)
    # values exactly at cut points (where a jump may take a third value)
    for axis_cuts in f.regular.cuts[:1]:
        for c in axis_cuts:
            if part.points[0] <= c <= part.points[-1]:
                v = float(f.exact_eval((c,)))
                touch = (lo[:, 0] <= float(c)) & (float(c) <= hi[:, 0])
                m = np.where(touch, np.minimum(m, v), m)
                M = np.where(touch, np.maximum(M, v), M)
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(M))):
        raise UnboundedFunction(f"{f.name} is unbounded on [{part.points[0]},{part.points[-1]}]")
    return m, M


def darboux(f: QCFunction, interval, n: int) -> DarbouxPair:
    """Lower and upper Darboux sums on the equispaced partition with ``n`` cells."""
    iv = _interval_of(interval)
    if n < 1:
        raise ValueError("n must be >= 1")
    part = Partition.equispaced(iv.lo, iv.hi, n)
    m, M = cell_extrema(f, part)
    h = np.array([float(x) for x in part.lengths])
    return DarbouxPair(math.fsum(m * h), math.fsum(M * h), m, M, part)


@dataclass(frozen=True)
class RiemannResult:
    value: float
    gap: float
    levels: int
    cells: int


def _bracket(f: QCFunction, pts: np.ndarray, smooth: bool) -> tuple[float, float]:
    lo, hi = pts[:-1, None], pts[1:, None]
    m, M = f.enclose(lo, hi)
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(M))):
        raise UnboundedFunction(f"{f.name} is unbounded")
    width = (hi - lo)[:, 0]
    lower, upper = m * width, M * width
    if smooth:
        pw = f.regular
        cuts = np.array([float(c) for c in pw.cuts[0]])
        cell_idx = np.searchsorted(cuts, 0.5 * (lo[:, 0] + hi[:, 0]), side="right")
        for key, piece in pw.pieces.items():
            idx = np.flatnonzero(cell_idx == key[0])
            if not len(idx):
                continue
            for i0, i1, k2 in _chunks(piece, lo[idx, 0], hi[idx, 0]):
                sel = idx[i0:i1]
                pl, pu = cell_brackets(piece, lo[sel], hi[sel], k2)
                lower[sel] = np.maximum(lower[sel], pl)
                upper[sel] = np.minimum(upper[sel], pu)
    return math.fsum(lower), math.fsum(upper)


def _chunks(piece, lo: np.ndarray, hi: np.ndarray, first: int = 16):
    """Runs of consecutive cells with a finite Hessian bound on each run.

    Runs without one are halved until they are single cells, which isolates
    kinks and endpoint singularities of the derivatives.
    """
    n = len(lo)
    step = max(1, -(-n // first))
    todo = [(i, min(i + step, n)) for i in range(0, n, step)]
    out = []
    while todo:
        i0, i1 = todo.pop()
        k2 = piece.hessian_bound(((Fraction(float(lo[i0])),), (Fraction(float(hi[i1 - 1])),)))
        if (k2 is not None and math.isfinite(k2)) or i1 - i0 == 1:
            out.append((i0, i1, k2))
        else:
            mid = (i0 + i1) // 2
            todo += [(i0, mid), (mid, i1)]
    return out


def riemann_integrate(f: QCFunction, interval, tol, max_levels: int = 20) -> RiemannResult:
    """Refine equispaced partitions ``N = 2**k`` until the bracket is below ``tol``.

    Piece breakpoints of the function are added to every partition.  Raises
    :class:`NotRiemannIntegrable` when the gap stalls above ``tol`` within
    the refinement budget.
    """
    iv = _interval_of(interval)
    tol = float(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if f.dim != 1:
        raise ValueError("riemann_integrate works on intervals")
    smooth = not f.has_exceptions
    a, b = float(iv.lo), float(iv.hi)
    cuts = np.array([float(c) for c in f.regular.cuts[0] if iv.lo < c < iv.hi])
    gaps: list[float] = []
    best = None
    for k in range(max_levels + 1):
        pts = np.union1d(np.linspace(a, b, 2**k + 1), cuts)
        lower, upper = _bracket(f, pts, smooth)
        gap = upper - lower
        gaps.append(gap)
        best = RiemannResult(0.5 * (lower + upper), gap, k, len(pts) - 1)
        if gap <= tol:
            return best
        if not smooth and k >= 4 and gap >= 0.99 * gaps[k - 4]:
            raise NotRiemannIntegrable(f"Darboux gap stalled at {gap:.6g} for {f.name}", gap, k)
    raise NotRiemannIntegrable(f"Darboux gap {best.gap:.6g} above tol after {max_levels} levels", best.gap, max_levels)


def oscillation_at(f: QCFunction, x0, radii: Sequence) -> list[float]:
    """Upper estimates of the oscillation of ``f`` on ``[x0 - r, x0 + r]``.

    The list is made nonincreasing (the true oscillation is monotone in r).
    """
    x0 = Fraction(x0)
    out: list[float] = []
    for r in radii:
        r = Fraction(r)
        if r <= 0:
            raise ValueError("radii must be positive")
        a, b = x0 - r, x0 + r
        lo, hi = np.array([[float(a)]]), np.array([[float(b)]])
        m, M = f.enclose(lo, hi)
        lo_v, hi_v = float(m[0]), float(M[0])
        for c in list(f.regular.cuts[0]) + [x0]:
            if a <= c <= b and f.domain.contains((c,)):
                v = float(f.exact_eval((c,)))
                lo_v, hi_v = min(lo_v, v), max(hi_v, v)
        w = hi_v - lo_v
        out.append(min(w, out[-1]) if out else w)
    return out


@dataclass(frozen=True)
class DiniResult:
    passed: bool
    partition: Partition | None
    heavy_length: Fraction
    n: int


def dini_test(f: QCFunction, interval, alpha, eps, max_n: int = 1 << 16) -> DiniResult:
    """Search ``N = 2**k <= max_n`` for a partition whose cells of
    oscillation at least ``alpha`` have total length below ``eps``."""
    iv = _interval_of(interval)
    alpha, eps = Fraction(alpha), Fraction(eps)
    best: DiniResult | None = None
    n = 1
    while n <= max_n:
        part = Partition.equispaced(iv.lo, iv.hi, n)
        m, M = cell_extrema(f, part)
        heavy = int(np.count_nonzero(M - m >= float(alpha)))
        total = heavy * (iv.hi - iv.lo) / n
        res = DiniResult(total < eps, part, total, n)
        if res.passed:
            return res
        if best is None or total < best.heavy_length:
            best = DiniResult(False, None, total, n)
        n *= 2
    return best


def riemann_zero_bound(f: QCFunction | None, interval, delta: Multirectangle, M) -> Fraction:
    """``M * L(delta)``: bounds ``|int f|`` when ``f`` vanishes off ``delta``."""
    return Fraction(M) * length(delta)
