"""Constructive Tietze extensions.

``extend_1d`` interpolates linearly across the bounded gaps of a closed set
``K`` and extends by constants beyond its extreme points.  ``Tonelli``
evaluates the d-dimensional averaging formula

    F_n(x) = 2**-n * sum_{k < 2**n} M(x, (1 + k/2**n) rho(x)),

where ``rho(x)`` is the distance from ``x`` to ``K`` and ``M(x, r)`` the
maximum of ``f`` on the closed ball ``D(x, r)`` intersected with ``K``.
Maxima are taken over a finite sample of ``K`` that always contains the
point of ``K`` nearest to ``x``; the sampled ``M`` is nondecreasing in
``r``, so ``F_n`` is nondecreasing in ``n`` and bounded by ``min_K f`` and
``max_K f`` exactly as the limit is.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .qc import QCFunction
from .sets import Interval, Multirectangle, Rectangle, Topology, merge_1d


class EmptyK(ValueError):
    pass


class UnboundedK(ValueError):
    pass


class SamplerTooCoarse(ValueError):
    pass


def _exact_sqrt(q: Fraction) -> Fraction | float:
    q = Fraction(q)
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return math.sqrt(q)


def _source(f) -> Callable:
    """Exact pointwise evaluator used on ``K``.

    Descriptors with exceptional sets are evaluated through their regular
    representative: ``K`` avoids the witness covers, where the two differ.
    """
    if isinstance(f, QCFunction):
        if f.exceptional:
            return lambda p: f.regular.exact(tuple(p))
        return lambda p: f.exact_eval(tuple(p))
    return lambda p: f(tuple(p))


# ---------------------------------------------------------------------------
# 1D


@dataclass(frozen=True)
class ClosedComplementDomain:
    """``K = box \\ I_removed`` for a closed bounded box and open removed parts."""

    box: Rectangle
    removed: Multirectangle = field(default_factory=Multirectangle)

    def __post_init__(self):
        if not self.box.bounded:
            raise UnboundedK("K must be bounded")
        object.__setattr__(self, "box", self.box.with_topology(Topology.CLOSED))
        opened = tuple(r.with_topology(Topology.OPEN) for r in self.removed.components)
        object.__setattr__(self, "removed", Multirectangle(opened))

    @property
    def dim(self) -> int:
        return self.box.dim

    def contains(self, point: Sequence) -> bool:
        return self.box.contains(point) and not self.removed.contains(point)

    def gaps(self) -> list[tuple[Fraction, Fraction]]:
        """Disjoint open gaps of ``K`` meeting the box (1D)."""
        if self.dim != 1:
            raise ValueError("gaps are defined in dimension 1")
        lo, hi = self.box.sides[0].lo, self.box.sides[0].hi
        ivs = [r.sides[0] for r in self.removed.components if r.sides[0].hi > lo and r.sides[0].lo < hi]
        return [(iv.lo, iv.hi) for iv in merge_1d(ivs)]

    def extremes(self) -> tuple[Fraction, Fraction]:
        """``min K`` and ``max K`` (1D)."""
        lo, hi = self.box.sides[0].lo, self.box.sides[0].hi
        a, b = lo, hi
        for g0, g1 in self.gaps():
            if g0 < a < g1:
                a = g1
        for g0, g1 in reversed(self.gaps()):
            if g0 < b < g1:
                b = g0
        if a > b or any(g0 < a < g1 for g0, g1 in self.gaps()):
            raise EmptyK("K is empty")
        return a, b

    def to_rects(self) -> list[Rectangle]:
        """``K`` as a finite union of closed (possibly degenerate) rectangles."""
        d = self.dim
        axes = []
        for k in range(d):
            lo, hi = self.box.sides[k].lo, self.box.sides[k].hi
            pts = {lo, hi}
            for r in self.removed.components:
                for v in (r.sides[k].lo, r.sides[k].hi):
                    if lo < v < hi:
                        pts.add(v)
            axes.append(sorted(pts))
        faces = []
        for k in range(d):
            a = axes[k]
            opts = [(p, p) for p in a] + list(zip(a, a[1:]))
            faces.append(opts)
        out = []
        for face in itertools.product(*faces):
            probe = tuple(p if p == q else (p + q) / 2 for p, q in face)
            if not self.removed.contains(probe):
                out.append(Rectangle(tuple(Interval(p, q) for p, q in face)))
        if not out:
            raise EmptyK("K is empty")
        return out


def extend_1d(f, K: ClosedComplementDomain, x) -> Fraction:
    """Linear-interpolation extension of ``f|_K`` evaluated at ``x``."""
    if K.dim != 1:
        raise ValueError("extend_1d works on subsets of the line")
    src = _source(f)
    x = Fraction(x)
    a, b = K.extremes()
    if x <= a:
        return Fraction(src((a,)))
    if x >= b:
        return Fraction(src((b,)))
    for g0, g1 in K.gaps():
        if g0 < x < g1:
            fa, fb = Fraction(src((g0,))), Fraction(src((g1,)))
            lam = (g1 - x) / (g1 - g0)
            return lam * fa + (1 - lam) * fb
    return Fraction(src((x,)))


# ---------------------------------------------------------------------------
# compact sets in R^d


class CompactSet:
    """Nonempty compact ``K`` with exact-or-float distance and a sampler."""

    dim: int

    def contains(self, x) -> bool:
        raise NotImplementedError

    def rho(self, x) -> Fraction | float:
        raise NotImplementedError

    def nearest(self, x) -> np.ndarray | None:
        """A point of ``K`` at distance ``rho(x)`` (None when not unique or unknown)."""
        raise NotImplementedError

    def samples(self, h: float) -> tuple[np.ndarray, float]:
        """Sample points and their covering radius."""
        raise NotImplementedError


@dataclass(frozen=True)
class RectUnion(CompactSet):
    rects: tuple

    def __post_init__(self):
        rects = tuple(self.rects)
        if not rects:
            raise EmptyK("K is empty")
        if any(not r.bounded for r in rects):
            raise UnboundedK("K must be bounded")
        object.__setattr__(self, "rects", rects)

    @classmethod
    def from_domain(cls, K: ClosedComplementDomain) -> "RectUnion":
        return cls(tuple(K.to_rects()))

    @property
    def dim(self) -> int:
        return self.rects[0].dim

    def contains(self, x) -> bool:
        p = tuple(Fraction(v) for v in x)
        return any(r.with_topology(Topology.CLOSED).contains(p) for r in self.rects)

    def rho_sq(self, x) -> Fraction:
        p = tuple(Fraction(v) for v in x)
        return min(r.distance_sq(p) for r in self.rects)

    def rho(self, x) -> Fraction | float:
        return _exact_sqrt(self.rho_sq(x))

    def nearest(self, x):
        p = tuple(Fraction(v) for v in x)
        best = min(self.rects, key=lambda r: r.distance_sq(p))
        return np.array([float(v) for v in best.nearest_point(p)])

    def samples(self, h: float):
        pts = []
        for r in self.rects:
            axes = []
            for s in r.sides:
                lo, hi = float(s.lo), float(s.hi)
                m = max(1, math.ceil((hi - lo) / h)) if hi > lo else 0
                axes.append(np.linspace(lo, hi, m + 1) if m else np.array([lo]))
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
            pts.append(grid)
        return np.unique(np.concatenate(pts), axis=0), h * math.sqrt(self.dim) / 2


@dataclass(frozen=True)
class PointCloud(CompactSet):
    points: tuple

    def __post_init__(self):
        pts = tuple(tuple(Fraction(v) for v in p) for p in self.points)
        if not pts:
            raise EmptyK("K is empty")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def contains(self, x) -> bool:
        return tuple(Fraction(v) for v in x) in set(self.points)

    def rho(self, x):
        p = tuple(Fraction(v) for v in x)
        return _exact_sqrt(min(sum((a - b) ** 2 for a, b in zip(p, q)) for q in self.points))

    def nearest(self, x):
        p = tuple(Fraction(v) for v in x)
        q = min(self.points, key=lambda q: sum((a - b) ** 2 for a, b in zip(p, q)))
        return np.array([float(v) for v in q])

    def samples(self, h: float):
        return np.array([[float(v) for v in p] for p in self.points]), 0.0


@dataclass(frozen=True)
class Circle(CompactSet):
    """The circle of radius ``radius`` about ``center`` in the plane."""

    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    extra_angles: tuple = ()

    dim = 2

    def contains(self, x) -> bool:
        return abs(math.hypot(x[0] - self.center[0], x[1] - self.center[1]) - self.radius) <= 1e-12

    def rho(self, x) -> float:
        return abs(math.hypot(float(x[0]) - self.center[0], float(x[1]) - self.center[1]) - self.radius)

    def nearest(self, x):
        dx, dy = float(x[0]) - self.center[0], float(x[1]) - self.center[1]
        n = math.hypot(dx, dy)
        if n == 0:
            return None
        return np.array([self.center[0] + self.radius * dx / n, self.center[1] + self.radius * dy / n])

    def samples(self, h: float):
        m = max(8, math.ceil(2 * math.pi * self.radius / h))
        th = np.concatenate([np.linspace(0, 2 * math.pi, m, endpoint=False), np.asarray(self.extra_angles, float)])
        pts = np.stack([self.center[0] + self.radius * np.cos(th), self.center[1] + self.radius * np.sin(th)], axis=1)
        step = 2 * math.pi * self.radius / m
        return pts, step / 2


def rho(K, x) -> Fraction | float:
    """Distance from ``x`` to ``K``."""
    if isinstance(K, ClosedComplementDomain):
        K = RectUnion.from_domain(K)
    return K.rho(x)


# ---------------------------------------------------------------------------
# Tonelli averaging


class Tonelli:
    """Evaluator of ``F_n`` for a function on a compact ``K``.

    ``f`` maps an ``(N, d)`` float array of points of ``K`` to values (a
    descriptor is evaluated through its float semantics).  ``lipschitz``
    certifies sampled maxima to within ``lipschitz * covering_radius``;
    :class:`SamplerTooCoarse` is raised when that exceeds ``tol``.
    """

    def __init__(self, f, K, h: float = 1e-2, tol: float | None = None, lipschitz: float | None = None,
                 exact: Callable | None = None):
        if isinstance(K, ClosedComplementDomain):
            K = RectUnion.from_domain(K)
        self.K = K
        self.d = K.dim
        if isinstance(f, QCFunction):
            self._vals = f.values
            self._exact = exact or _source(f)
        else:
            self._vals = f
            self._exact = exact
        self.samples, self.cover = K.samples(h)
        self.values = np.asarray(self._vals(self.samples), dtype=float).reshape(-1)
        if tol is not None:
            if lipschitz is None:
                if np.ptp(self.values) > 0:
                    raise SamplerTooCoarse("no Lipschitz hint to certify sampled maxima")
            elif lipschitz * self.cover > tol:
                raise SamplerTooCoarse(
                    f"sampler spacing certifies maxima only to {lipschitz * self.cover:.3g} > {tol:.3g}")
        self.lo, self.hi = float(self.values.min()), float(self.values.max())

    def rho(self, x) -> float:
        return float(self.K.rho(x))

    def _ball_maxima(self, x, radii: np.ndarray) -> np.ndarray:
        xf = np.array([float(v) for v in x])
        dist = np.sqrt(((self.samples - xf) ** 2).sum(axis=1))
        order = np.argsort(dist, kind="stable")
        sd, sv = dist[order], np.maximum.accumulate(self.values[order])
        near = self.K.nearest(x)
        base = -np.inf
        if near is not None:
            base = float(np.asarray(self._vals(near[None, :]), dtype=float).reshape(-1)[0])
        idx = np.searchsorted(sd, radii * (1 + 1e-12) + 1e-15, side="right")
        out = np.where(idx > 0, sv[np.maximum(idx - 1, 0)], -np.inf)
        return np.maximum(out, base)

    def M(self, x, r: float) -> float:
        return float(self._ball_maxima(x, np.array([float(r)]))[0])

    def __call__(self, x, n: int = 10):
        if n < 0:
            raise ValueError("n must be >= 0")
        r = self.K.rho(x)
        if r == 0:
            if self._exact is not None:
                return self._exact(tuple(Fraction(v) for v in x))
            return float(np.asarray(self._vals(np.array([[float(v) for v in x]])), float).reshape(-1)[0])
        r = float(r)
        k = np.arange(2 ** n)
        radii = (1 + k / 2 ** n) * r
        m = self._ball_maxima(x, radii)
        # pairwise summation in a fixed order
        return float(np.sum(m)) / 2 ** n

    def sequence(self, x, depth: int) -> list[float]:
        return [self(x, n) for n in range(depth + 1)]


def extend_nd(f, K, x, n: int = 10, h: float = 1e-2, tol: float | None = None,
              lipschitz: float | None = None) -> float:
    """``F_n(x)`` for ``f`` on the compact set ``K``."""
    return Tonelli(f, K, h, tol, lipschitz)(x, n)


# ---------------------------------------------------------------------------
# the circle counterexample


def circle_hat(j: int) -> Callable:
    """``f_j`` on the unit circle: zero for odd ``j``; for ``j = 2 nu`` a
    hat in the angle rising to 1 at ``1/nu`` and vanishing off ``(0, 2/nu)``."""
    if j < 1:
        raise ValueError("j must be >= 1")

    def f(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if j % 2:
            return np.zeros(len(X))
        nu = j // 2
        th = np.mod(np.arctan2(X[:, 1], X[:, 0]), 2 * math.pi)
        return np.clip(np.minimum(nu * th, 2 - nu * th), 0.0, None)

    return f


def circle_sequence_at_origin(count: int, n: int = 6, h: float = 1e-2) -> list[float]:
    """``F_n(0,0)`` for ``f_1 .. f_count`` on the unit circle."""
    out = []
    for j in range(1, count + 1):
        peak = () if j % 2 else (1 / (j // 2),)
        K = Circle(extra_angles=peak)
        out.append(Tonelli(circle_hat(j), K, h)((0.0, 0.0), n))
    return out
