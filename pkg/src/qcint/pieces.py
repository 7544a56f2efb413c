"""Smooth building blocks and piecewise assemblies.

A :class:`Piece` is a smooth function on (a box of) R^d that can be
evaluated on float arrays, evaluated exactly at rational points when its
formula allows it, and *enclosed*: for a batch of boxes it returns lower
and upper bounds of its range on each box.  Pieces also report bounds on
their gradient and Hessian over a box, and an exact integral when a closed
form with rational value exists.  Those data drive the certified Darboux
brackets of :mod:`qcint.riemann`.

A :class:`Piecewise` glues pieces on the cells of a tensor grid of
rational cut points.  It is the a.e. representative of a catalog
function: discontinuities can only occur on cut hyperplanes listed in
``jumps``.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

Box = tuple[tuple, tuple]  # (lo, hi) coordinate tuples


def _f(x) -> float:
    return float(x)


def _box_floats(box: Box) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = box
    return np.array([_f(v) for v in lo], dtype=float)[None, :], np.array([_f(v) for v in hi], dtype=float)[None, :]


def _other_volume(box: Box, axes) -> Fraction | float:
    v: Fraction | float = Fraction(1)
    for k, (a, b) in enumerate(zip(*box)):
        if k not in axes:
            v = v * (b - a)
    return v


class Piece:
    """Base class; subclasses override what they can do exactly."""

    dim: int = 1
    axes: frozenset = frozenset()

    def values(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def exact(self, p: Sequence):
        return float(self.values(np.array([[_f(v) for v in p]], dtype=float))[0])

    def enclose(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def gradient_bound(self, box: Box) -> float | None:
        return None

    def hessian_bound(self, box: Box) -> float | None:
        return None

    def integral(self, box: Box) -> Fraction | None:
        return None

    def range_on(self, box: Box) -> tuple[float, float]:
        lo, hi = _box_floats(box)
        a, b = self.enclose(lo, hi)
        return float(a[0]), float(b[0])

    @property
    def is_constant(self) -> bool:
        return False

    # algebra -------------------------------------------------------------
    def __add__(self, other: "Piece") -> "Piece":
        return add(self, other)

    def __mul__(self, other: "Piece") -> "Piece":
        return mul(self, other)

    def __neg__(self) -> "Piece":
        return mul(Poly.const(-1, self.dim), self)


# ---------------------------------------------------------------------------
# atoms


def _poly_eval(coeffs: Sequence, x):
    acc = coeffs[-1] if coeffs else 0
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


@dataclass(frozen=True, eq=False)
class Poly(Piece):
    """Polynomial ``sum c_k x_axis**k`` with exact rational coefficients."""

    coeffs: tuple
    axis: int = 0
    dim: int = 1

    def __post_init__(self):
        cs = [Fraction(c) for c in self.coeffs] or [Fraction(0)]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))
        object.__setattr__(self, "_fc", np.array([float(c) for c in reversed(cs)]))
        object.__setattr__(self, "_crit", None)

    @classmethod
    def const(cls, c, dim: int = 1) -> "Poly":
        return cls((Fraction(c),), 0, dim)

    @property
    def axes(self) -> frozenset:
        return frozenset() if self.degree == 0 else frozenset({self.axis})

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_constant(self) -> bool:
        return self.degree == 0

    def derivative(self) -> "Poly":
        return Poly(tuple(k * c for k, c in enumerate(self.coeffs))[1:], self.axis, self.dim)

    def values(self, X):
        return np.polyval(self._fc, X[:, self.axis]) if self.degree else np.full(len(X), float(self.coeffs[0]))

    def exact(self, p):
        x = p[self.axis]
        if isinstance(x, float):
            return float(_poly_eval([float(c) for c in self.coeffs], x))
        return _poly_eval(self.coeffs, Fraction(x))

    def critical_points(self) -> np.ndarray:
        crit = self._crit
        if crit is None:
            d = self.derivative()
            if d.degree <= 0:
                crit = np.array([])
            else:
                roots = np.roots(d._fc)
                crit = np.sort(roots[np.abs(roots.imag) < 1e-12].real)
            object.__setattr__(self, "_crit", crit)
        return crit

    def enclose(self, lo, hi):
        a, b = lo[:, self.axis], hi[:, self.axis]
        va, vb = self.values(lo), self.values(hi)
        low, high = np.minimum(va, vb), np.maximum(va, vb)
        for r in self.critical_points():
            inside = (a < r) & (r < b)
            if inside.any():
                vr = float(np.polyval(self._fc, r))
                low = np.where(inside, np.minimum(low, vr), low)
                high = np.where(inside, np.maximum(high, vr), high)
        return low, high

    def _abs_max(self, box: Box) -> float:
        a, b = self.range_on(box)
        return max(abs(a), abs(b))

    def gradient_bound(self, box):
        return self.derivative()._abs_max(box)

    def hessian_bound(self, box):
        return self.derivative().derivative()._abs_max(box)

    def antiderivative(self) -> "Poly":
        return Poly((Fraction(0),) + tuple(c / (k + 1) for k, c in enumerate(self.coeffs)), self.axis, self.dim)

    def integral(self, box):
        lo, hi = box
        a, b = lo[self.axis], hi[self.axis]
        if any(isinstance(v, float) for v in lo + hi):
            return None
        prim = self.antiderivative()
        if self.degree == 0:
            return self.coeffs[0] * _other_volume(box, ())
        return (prim.exact(hi) - prim.exact(lo)) * _other_volume(box, {self.axis})

    def __repr__(self) -> str:
        return f"Poly({[str(c) for c in self.coeffs]}, axis={self.axis})"


@dataclass(frozen=True, eq=False)
class CosPower(Piece):
    """``cos(m! * pi * x)**(2n)``."""

    m: int
    n: int
    axis: int = 0
    dim: int = 1

    @property
    def axes(self):
        return frozenset({self.axis})

    @property
    def freq(self) -> int:
        return math.factorial(self.m)

    def values(self, X):
        return np.cos(self.freq * math.pi * X[:, self.axis]) ** (2 * self.n)

    def exact(self, p):
        x = p[self.axis]
        if self.n == 0:
            return Fraction(1)
        if not isinstance(x, float):
            t = Fraction(x) * self.freq  # cos(t*pi)
            if t.denominator == 1:
                return Fraction(1)
            if t.denominator == 2:
                return Fraction(0)
        return math.cos(self.freq * math.pi * float(x)) ** (2 * self.n)

    def enclose(self, lo, hi):
        a, b = lo[:, self.axis] * self.freq, hi[:, self.axis] * self.freq
        va = np.cos(math.pi * a) ** (2 * self.n)
        vb = np.cos(math.pi * b) ** (2 * self.n)
        low, high = np.minimum(va, vb), np.maximum(va, vb)
        has_one = np.floor(b) >= np.ceil(a)           # cos(k pi) = +-1
        has_zero = np.floor(b - 0.5) >= np.ceil(a - 0.5)
        high = np.where(has_one, 1.0, high)
        low = np.where(has_zero, 0.0, low)
        return low, high

    def gradient_bound(self, box):
        return 2 * self.n * self.freq * math.pi

    def hessian_bound(self, box):
        a = self.freq * math.pi
        return 2 * self.n * max(2 * self.n - 1, 1) * a * a

    def _primitive(self, x: float) -> float:
        # cos^(2n)(ax) = 4^-n [C(2n,n) + 2 sum_k C(2n,k) cos(2(n-k)ax)]
        a = self.freq * math.pi
        n = self.n
        acc = math.comb(2 * n, n) * x
        for k in range(n):
            w = 2 * (n - k) * a
            acc += 2 * math.comb(2 * n, k) * math.sin(w * x) / w
        return acc / 4**n

    def integral(self, box):
        a, b = float(box[0][self.axis]), float(box[1][self.axis])
        other = _other_volume(box, {self.axis})
        return (self._primitive(b) - self._primitive(a)) * float(other)


@dataclass(frozen=True, eq=False)
class Exp(Piece):
    """``exp(rate * x_axis)``."""

    rate: Fraction
    axis: int = 0
    dim: int = 1

    @property
    def axes(self):
        return frozenset({self.axis})

    def values(self, X):
        return np.exp(float(self.rate) * X[:, self.axis])

    def enclose(self, lo, hi):
        va, vb = self.values(lo), self.values(hi)
        return np.minimum(va, vb), np.maximum(va, vb)

    def _max(self, box):
        return max(self.range_on(box))

    def gradient_bound(self, box):
        return abs(float(self.rate)) * self._max(box)

    def hessian_bound(self, box):
        return float(self.rate) ** 2 * self._max(box)

    def integral(self, box):
        r = float(self.rate)
        a, b = float(box[0][self.axis]), float(box[1][self.axis])
        other = float(_other_volume(box, {self.axis}))
        if r == 0:
            return (b - a) * other
        return (math.exp(r * b) - math.exp(r * a)) / r * other


@dataclass(frozen=True, eq=False)
class RPow(Piece):
    """``x_axis ** p`` for rational ``p`` on the positive half-line."""

    p: Fraction
    axis: int = 0
    dim: int = 1

    @property
    def axes(self):
        return frozenset({self.axis})

    def values(self, X):
        x = X[:, self.axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, np.abs(x) ** float(self.p), np.inf if self.p < 0 else 0.0)

    def exact(self, p):
        x = p[self.axis]
        if not isinstance(x, float) and Fraction(self.p).denominator == 1 and self.p >= 0:
            return Fraction(x) ** int(self.p)
        return float(x) ** float(self.p)

    def enclose(self, lo, hi):
        va, vb = self.values(lo), self.values(hi)
        return np.minimum(va, vb), np.maximum(va, vb)

    def _deriv_max(self, box, order: int) -> float:
        p = float(self.p)
        coef = abs(math.prod(p - k for k in range(order)))
        if coef == 0:
            return 0.0
        a, b = float(box[0][self.axis]), float(box[1][self.axis])
        if a <= 0 and p - order < 0:
            return math.inf
        return coef * max(a ** (p - order) if a > 0 else 0.0, b ** (p - order))

    def gradient_bound(self, box):
        return self._deriv_max(box, 1)

    def hessian_bound(self, box):
        return self._deriv_max(box, 2)

    def integral(self, box):
        p = Fraction(self.p)
        lo, hi = box
        a, b = lo[self.axis], hi[self.axis]
        if a < 0 or p == -1:
            return None
        other = _other_volume(box, {self.axis})
        if p.denominator == 1 and p >= 0 and not isinstance(a, float) and not isinstance(b, float):
            k = int(p) + 1
            if k > 4096 and (a not in (0, 1) or b not in (0, 1)):
                return (float(b) ** k - float(a) ** k) / k * float(other)
            return (Fraction(b) ** k - Fraction(a) ** k) / k * other
        if p < -1 and a == 0:
            return math.inf
        q = float(p) + 1
        return (float(b) ** q - float(a) ** q) / q * float(other)


# ---------------------------------------------------------------------------
# compounds


@dataclass(frozen=True, eq=False)
class Sum(Piece):
    a: Piece
    b: Piece

    @property
    def dim(self):
        return self.a.dim

    @property
    def axes(self):
        return self.a.axes | self.b.axes

    def values(self, X):
        return self.a.values(X) + self.b.values(X)

    def exact(self, p):
        return self.a.exact(p) + self.b.exact(p)

    def enclose(self, lo, hi):
        la, ha = self.a.enclose(lo, hi)
        lb, hb = self.b.enclose(lo, hi)
        return la + lb, ha + hb

    def gradient_bound(self, box):
        ga, gb = self.a.gradient_bound(box), self.b.gradient_bound(box)
        return None if ga is None or gb is None else ga + gb

    def hessian_bound(self, box):
        ha, hb = self.a.hessian_bound(box), self.b.hessian_bound(box)
        return None if ha is None or hb is None else ha + hb

    def integral(self, box):
        ia, ib = self.a.integral(box), self.b.integral(box)
        return None if ia is None or ib is None else ia + ib


@dataclass(frozen=True, eq=False)
class Prod(Piece):
    a: Piece
    b: Piece

    @property
    def dim(self):
        return self.a.dim

    @property
    def axes(self):
        return self.a.axes | self.b.axes

    def values(self, X):
        return self.a.values(X) * self.b.values(X)

    def exact(self, p):
        return self.a.exact(p) * self.b.exact(p)

    def enclose(self, lo, hi):
        la, ha = self.a.enclose(lo, hi)
        lb, hb = self.b.enclose(lo, hi)
        with np.errstate(invalid="ignore"):
            c = np.stack([la * lb, la * hb, ha * lb, ha * hb])
        c = np.nan_to_num(c, nan=0.0)
        return c.min(axis=0), c.max(axis=0)

    def _absmax(self, piece, box):
        a, b = piece.range_on(box)
        return max(abs(a), abs(b))

    def gradient_bound(self, box):
        ga, gb = self.a.gradient_bound(box), self.b.gradient_bound(box)
        if ga is None or gb is None:
            return None
        return ga * self._absmax(self.b, box) + gb * self._absmax(self.a, box)

    def hessian_bound(self, box):
        ha, hb = self.a.hessian_bound(box), self.b.hessian_bound(box)
        ga, gb = self.a.gradient_bound(box), self.b.gradient_bound(box)
        if None in (ha, hb, ga, gb):
            return None
        return ha * self._absmax(self.b, box) + hb * self._absmax(self.a, box) + 2 * ga * gb

    def integral(self, box):
        if self.a.is_constant or self.b.is_constant:
            const, other = (self.a, self.b) if self.a.is_constant else (self.b, self.a)
            io = other.integral(box)
            return None if io is None else const.coeffs[0] * io
        if self.a.axes & self.b.axes:
            return None
        ia, ib = self.a.integral(box), self.b.integral(box)
        if ia is None or ib is None:
            return None
        vol = _other_volume(box, ())
        if vol == 0:
            return Fraction(0)
        return ia * ib / vol


def _as_power(piece: Piece):
    """``(axis, exponent)`` for a monic monomial or power piece."""
    if isinstance(piece, RPow):
        return piece.axis, piece.p
    if isinstance(piece, Poly) and piece.degree >= 1 and piece.coeffs[-1] == 1 and not any(piece.coeffs[:-1]):
        return piece.axis, Fraction(piece.degree)
    return None


def _order(a: Piece, b: Piece, box) -> int | None:
    """+1 if ``a >= b`` on the box, -1 if ``a <= b``, None if unknown."""
    pa, pb = _as_power(a), _as_power(b)
    if pa and pb and pa[0] == pb[0]:
        k = pa[0]
        lo, hi = box[0][k], box[1][k]
        if pa[1] == pb[1]:
            return 1
        if 0 <= lo and hi <= 1:
            return 1 if pa[1] < pb[1] else -1
        if lo >= 1:
            return 1 if pa[1] > pb[1] else -1
        return None
    for x, y, sign in ((a, b, 1), (b, a, -1)):
        if isinstance(x, Extremum):
            if x.upper and any(_order(c, y, box) == 1 for c in (x.a, x.b)):
                return sign
            if not x.upper and any(_order(c, y, box) == -1 for c in (x.a, x.b)):
                return -sign
    return None


@dataclass(frozen=True, eq=False)
class Extremum(Piece):
    """Pointwise max (``upper=True``) or min of two pieces."""

    a: Piece
    b: Piece
    upper: bool = True

    @property
    def dim(self):
        return self.a.dim

    @property
    def axes(self):
        return self.a.axes | self.b.axes

    def _pick(self, u, v):
        return max(u, v) if self.upper else min(u, v)

    def values(self, X):
        f = np.maximum if self.upper else np.minimum
        return f(self.a.values(X), self.b.values(X))

    def exact(self, p):
        return self._pick(self.a.exact(p), self.b.exact(p))

    def enclose(self, lo, hi):
        la, ha = self.a.enclose(lo, hi)
        lb, hb = self.b.enclose(lo, hi)
        f = np.maximum if self.upper else np.minimum
        return f(la, lb), f(ha, hb)

    def _dominant(self, box) -> Piece | None:
        """The operand that realises the extremum on the whole box, if any."""
        order = _order(self.a, self.b, box)
        if order is not None:
            return self.a if (order >= 0) == self.upper else self.b
        la, ha = self.a.range_on(box)
        lb, hb = self.b.range_on(box)
        if self.upper:
            if la >= hb:
                return self.a
            if lb >= ha:
                return self.b
        else:
            if ha <= lb:
                return self.a
            if hb <= la:
                return self.b
        return None

    def gradient_bound(self, box):
        dom = self._dominant(box)
        if dom is not None:
            return dom.gradient_bound(box)
        ga, gb = self.a.gradient_bound(box), self.b.gradient_bound(box)
        return None if ga is None or gb is None else max(ga, gb)

    def hessian_bound(self, box):
        dom = self._dominant(box)
        return None if dom is None else dom.hessian_bound(box)

    def integral(self, box):
        dom = self._dominant(box)
        return None if dom is None else dom.integral(box)

    @property
    def is_constant(self):
        return self.a.is_constant and self.b.is_constant

    @property
    def coeffs(self):
        return (self._pick(self.a.coeffs[0], self.b.coeffs[0]),)


def add(a: Piece, b: Piece) -> Piece:
    if isinstance(a, Poly) and isinstance(b, Poly) and (a.axis == b.axis or a.is_constant or b.is_constant):
        axis = b.axis if a.is_constant else a.axis
        n = max(len(a.coeffs), len(b.coeffs))
        ca = list(a.coeffs) + [0] * (n - len(a.coeffs))
        cb = list(b.coeffs) + [0] * (n - len(b.coeffs))
        return Poly(tuple(x + y for x, y in zip(ca, cb)), axis, a.dim)
    return Sum(a, b)


def mul(a: Piece, b: Piece) -> Piece:
    for x in (a, b):
        if isinstance(x, Poly) and x.is_constant and x.coeffs[0] == 0:
            return Poly.const(0, a.dim)
    if isinstance(a, Poly) and isinstance(b, Poly) and (a.axis == b.axis or a.is_constant or b.is_constant):
        axis = b.axis if a.is_constant else a.axis
        out = [Fraction(0)] * (len(a.coeffs) + len(b.coeffs) - 1)
        for i, x in enumerate(a.coeffs):
            for j, y in enumerate(b.coeffs):
                out[i + j] += x * y
        return Poly(tuple(out), axis, a.dim)
    if isinstance(a, Poly) and a.is_constant and a.coeffs[0] == 1:
        return b
    if isinstance(b, Poly) and b.is_constant and b.coeffs[0] == 1:
        return a
    return Prod(a, b)


def extremum(a: Piece, b: Piece, upper: bool) -> Piece:
    if isinstance(a, Poly) and isinstance(b, Poly) and a.is_constant and b.is_constant:
        pick = max if upper else min
        return Poly.const(pick(a.coeffs[0], b.coeffs[0]), a.dim)
    return Extremum(a, b, upper)


# ---------------------------------------------------------------------------
# piecewise assemblies


def _representatives(cuts: Sequence[Fraction]) -> list[Fraction]:
    """One interior point per cell of the line cut at ``cuts``."""
    if not cuts:
        return [Fraction(0)]
    reps = [cuts[0] - 1]
    reps += [(a + b) / 2 for a, b in zip(cuts, cuts[1:])]
    reps.append(cuts[-1] + 1)
    return reps


@dataclass(frozen=True, eq=False)
class Piecewise:
    """Pieces on the cells of a tensor grid.

    ``cuts[k]`` are the sorted interior cut points on axis ``k``; cell
    index ``i`` on that axis is the open interval between cut ``i-1`` and
    cut ``i``.  ``jumps[k]`` lists the cuts across which the function may
    be discontinuous (the others are kinks).
    """

    dim: int
    cuts: tuple
    pieces: Mapping
    jumps: tuple

    def __post_init__(self):
        object.__setattr__(self, "cuts", tuple(tuple(sorted(Fraction(c) for c in cs)) for cs in self.cuts))
        object.__setattr__(self, "jumps", tuple(frozenset(Fraction(c) for c in js) for js in self.jumps))
        object.__setattr__(self, "_fcuts", [np.array([float(c) for c in cs]) for cs in self.cuts])

    @classmethod
    def single(cls, piece: Piece) -> "Piecewise":
        d = piece.dim
        return cls(d, ((),) * d, {(0,) * d: piece}, (frozenset(),) * d)

    @classmethod
    def line(cls, cuts: Sequence, pieces: Sequence[Piece], jumps: Sequence | None = None) -> "Piecewise":
        cuts = [Fraction(c) for c in cuts]
        if len(pieces) != len(cuts) + 1:
            raise ValueError("need one more piece than cuts")
        jumps = cuts if jumps is None else jumps
        return cls(1, (tuple(cuts),), {(i,): p for i, p in enumerate(pieces)}, (frozenset(jumps),))

    def cell_of(self, point: Sequence) -> tuple:
        return tuple(bisect.bisect_right(cs, x) for cs, x in zip(self.cuts, point))

    def piece_at(self, point: Sequence) -> Piece:
        return self.pieces[self.cell_of(point)]

    def exact(self, point: Sequence):
        return self.piece_at(point).exact(point)

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        idx = np.stack([np.searchsorted(fc, X[:, k], side="right") for k, fc in enumerate(self._fcuts)], axis=1)
        out = np.empty(len(X))
        if len(self.pieces) == 1:
            (piece,) = self.pieces.values()
            return np.asarray(piece.values(X), dtype=float) * np.ones(len(X))
        keys = {tuple(r) for r in idx.tolist()}
        for key in keys:
            mask = np.all(idx == np.array(key), axis=1)
            out[mask] = self.pieces[key].values(X[mask])
        return out

    def cell_box(self, key: tuple, box: Box) -> Box | None:
        """Intersection of a grid cell with a box (None if empty)."""
        lo, hi = [], []
        for k, i in enumerate(key):
            cs = self.cuts[k]
            a = cs[i - 1] if i > 0 else box[0][k]
            b = cs[i] if i < len(cs) else box[1][k]
            a, b = max(a, box[0][k]), min(b, box[1][k])
            if a >= b:
                return None
            lo.append(a)
            hi.append(b)
        return tuple(lo), tuple(hi)

    def cells_in(self, box: Box):
        """Yield ``(sub_box, piece)`` for the cells meeting ``box``."""
        for key, piece in self.pieces.items():
            sub = self.cell_box(key, box)
            if sub is not None:
                yield sub, piece

    def cuts_in(self, box: Box, axis: int, jumps_only: bool = False) -> list[Fraction]:
        src = self.jumps[axis] if jumps_only else self.cuts[axis]
        return sorted(c for c in src if box[0][axis] < c < box[1][axis])

    def combine(self, other: "Piecewise", op: Callable[[Piece, Piece], Piece]) -> "Piecewise":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        cuts = tuple(tuple(sorted(set(a) | set(b))) for a, b in zip(self.cuts, other.cuts))
        jumps = tuple(a | b for a, b in zip(self.jumps, other.jumps))
        reps = [_representatives(cs) for cs in cuts]
        pieces = {}
        for key in itertools.product(*(range(len(r)) for r in reps)):
            point = tuple(reps[k][i] for k, i in enumerate(key))
            pieces[key] = op(self.piece_at(point), other.piece_at(point))
        return Piecewise(self.dim, cuts, pieces, jumps)

    def map(self, fn: Callable[[Piece], Piece]) -> "Piecewise":
        return Piecewise(self.dim, self.cuts, {k: fn(p) for k, p in self.pieces.items()}, self.jumps)

    def with_jumps(self, jumps) -> "Piecewise":
        return Piecewise(self.dim, self.cuts, self.pieces, jumps)

    def range_on(self, box: Box) -> tuple[float, float]:
        lo, hi = math.inf, -math.inf
        for sub, piece in self.cells_in(box):
            a, b = piece.range_on(sub)
            lo, hi = min(lo, a), max(hi, b)
        return lo, hi
