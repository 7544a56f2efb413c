"""Quasicontinuous function descriptors.

A :class:`QCFunction` couples

* ``regular``: a :class:`~qcint.pieces.Piecewise` a.e. representative whose
  only discontinuities lie on the cut hyperplanes listed in its ``jumps``;
* ``exact_eval``: the true value at exact (rational) points;
* ``exceptional``: countable sets where the true value may differ from
  ``regular`` (1D only; e.g. the rationals for the Dirichlet function).

The witness of order ``eps`` covers the jump hyperplanes with thin open
slabs and the exceptional sets with geometric point covers.  Off the
witness the function equals ``regular`` restricted to a set where it is
continuous, so the witness is correct by construction.

The associated continuous function of order ``eps`` interpolates
``regular`` linearly across the slabs (axis by axis).  It agrees with the
function off the witness and is bounded by the same bound.
"""

from __future__ import annotations

import bisect
import itertools
import math
import operator
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import pieces as P
from .pieces import Piece, Piecewise, Poly
from .rational import INF, rational_enumeration
from .sets import (CountableCover, Interval, Multirectangle, Rectangle, Topology,
                   UnboundedSet, length)


class DomainMismatch(ValueError):
    pass


class NotCharacteristic(ValueError):
    pass


class WitnessBudgetExceeded(ValueError):
    pass


# ---------------------------------------------------------------------------
# exceptional sets


class ExceptionalSet:
    """A countable subset of the line with prescribed values on it."""

    def contains(self, x) -> bool:
        raise NotImplementedError

    def value(self, x):
        raise NotImplementedError

    def cover(self, budget: Fraction) -> Multirectangle:
        """Open cover with length strictly below ``budget``."""
        raise NotImplementedError

    def range_on_cells(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Bounds of the values taken on the set inside each closed cell.

        Cells meeting no point of the set get ``(+inf, -inf)``.
        """
        raise NotImplementedError


@dataclass(frozen=True)
class FinitePoints(ExceptionalSet):
    values: tuple  # ((point, value), ...)

    def contains(self, x) -> bool:
        return not isinstance(x, float) and any(p == x for p, _ in self.values)

    def value(self, x):
        for p, v in self.values:
            if p == x:
                return v
        raise KeyError(x)

    def cover(self, budget):
        from .cantor import cover_countable
        return cover_countable([p for p, _ in self.values], budget)

    def range_on_cells(self, lo, hi):
        low = np.full(len(lo), np.inf)
        high = np.full(len(lo), -np.inf)
        for p, v in self.values:
            inside = (lo <= float(p)) & (float(p) <= hi)
            low = np.where(inside, np.minimum(low, float(v)), low)
            high = np.where(inside, np.maximum(high, float(v)), high)
        return low, high


def _in_unit(x) -> bool:
    return not isinstance(x, float) and 0 <= x <= 1


@dataclass(frozen=True)
class UnitRationals(ExceptionalSet):
    """Q ∩ [0,1] with value 1 (``thomae=False``) or ``1/q`` (``thomae=True``)."""

    thomae: bool = False
    denominator_cap: int = 2048

    def contains(self, x) -> bool:
        return _in_unit(x)

    def value(self, x):
        return Fraction(1, Fraction(x).denominator) if self.thomae else Fraction(1)

    def cover(self, budget):
        budget = Fraction(budget)
        tail = CountableCover("Q∩[0,1]", budget, rational_enumeration, _in_unit)
        return Multirectangle((), (tail,))

    def range_on_cells(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        meets = (hi >= 0) & (lo <= 1)
        positive = meets & (hi > lo)
        if not self.thomae:
            low = np.where(positive, 1.0, np.inf)
            high = np.where(positive, 1.0, -np.inf)
            # degenerate cells: the point is treated as exact only if it is a
            # float-representable dyadic, which is rational
            point = meets & (hi == lo)
            return np.where(point, 1.0, low), np.where(point, 1.0, high)
        # Upper bound of 1/q over p/q in each cell: mark cells containing
        # fractions with small denominators; any other rational in a cell
        # has denominator > cap.
        cap = self.denominator_cap
        high = np.where(meets, 1.0 / (cap + 1), -np.inf)
        low = np.where(meets, 0.0, np.inf)
        sorted_cells = len(lo) < 2 or bool(np.all(lo[1:] >= lo[:-1]) and np.all(lo[1:] >= hi[:-1] - 1e-15))
        if not sorted_cells:
            for i in np.nonzero(meets)[0]:
                a = Fraction(max(lo[i], 0.0))
                b = Fraction(min(hi[i], 1.0))
                high[i] = 1.0 / simplest_between(a, b).denominator
            return low, high
        tol = 1e-12
        for q in range(cap, 0, -1):
            pts = np.arange(q + 1) / q
            first = np.searchsorted(hi, pts - tol, side="left")
            last = np.searchsorted(lo, pts + tol, side="right")
            for shift in (0, 1):
                idx = first + shift
                ok = idx < last
                high[idx[ok]] = np.maximum(high[idx[ok]], 1.0 / q)
        return low, high


def simplest_between(a: Fraction, b: Fraction) -> Fraction:
    """The fraction with the smallest denominator in the closed ``[a, b]``."""
    if a > b:
        raise ValueError("empty interval")
    fl = math.floor(a)
    if fl == a or fl + 1 <= b:
        return Fraction(fl if fl == a else fl + 1)
    inner = simplest_between(1 / (b - fl), 1 / (a - fl))
    return fl + 1 / inner


# ---------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class Witness:
    """An associated multirectangle in structured form.

    ``slabs`` are ``(axis, cut, half_width)`` triples; each slab is the open
    set ``|x_axis - cut| < half_width`` restricted to an open box slightly
    larger than ``extent`` in the remaining axes.
    """

    dim: int
    extent: Rectangle | None
    slabs: tuple = ()
    covers: tuple = ()  # finite open multirectangles and countable tails

    def _slab_rect(self, axis, cut, delta) -> Rectangle:
        sides = []
        for k in range(self.dim):
            if k == axis:
                sides.append(Interval(cut - delta, cut + delta, Topology.OPEN))
            else:
                s = self.extent.sides[k]
                pad = (s.hi - s.lo) / 2 if s.hi > s.lo else Fraction(1, 2)
                sides.append(Interval(s.lo - pad, s.hi + pad, Topology.OPEN))
        return Rectangle(tuple(sides))

    @property
    def multirectangle(self) -> Multirectangle:
        out = Multirectangle(tuple(self._slab_rect(*s) for s in self.slabs))
        for c in self.covers:
            out = out + c
        return out

    @property
    def length(self) -> Fraction:
        return length(self.multirectangle)

    def __or__(self, other: "Witness") -> "Witness":
        extent = self.extent if self.extent is not None else other.extent
        return Witness(self.dim, extent, self.slabs + other.slabs, self.covers + other.covers)

    @property
    def empty(self) -> bool:
        return not self.slabs and not self.covers

    def gaps(self, axis: int) -> list[tuple[Fraction, Fraction]]:
        """Merged open slab intervals along ``axis``."""
        ivs = sorted((c - d, c + d) for a, c, d in self.slabs if a == axis)
        out: list[list[Fraction]] = []
        for a, b in ivs:
            if out and a < out[-1][1]:
                out[-1][1] = max(out[-1][1], b)
            else:
                out.append([a, b])
        return [(a, b) for a, b in out]


def _other_volume(extent: Rectangle, axis: int) -> Fraction:
    v = Fraction(1)
    for k, s in enumerate(extent.sides):
        if k != axis:
            pad = (s.hi - s.lo) / 2 if s.hi > s.lo else Fraction(1, 2)
            v *= s.hi - s.lo + 2 * pad
    return v


# ---------------------------------------------------------------------------
# structural restriction of pieces


def fix(piece: Piece, axis: int, v) -> Piece:
    """``piece`` with coordinate ``axis`` frozen at ``v``."""
    if axis not in piece.axes:
        return piece
    if isinstance(piece, P.Sum):
        return P.add(fix(piece.a, axis, v), fix(piece.b, axis, v))
    if isinstance(piece, P.Prod):
        return P.mul(fix(piece.a, axis, v), fix(piece.b, axis, v))
    if isinstance(piece, P.Extremum):
        return P.extremum(fix(piece.a, axis, v), fix(piece.b, axis, v), piece.upper)
    point = tuple(v if k == axis else Fraction(0) for k in range(piece.dim))
    return Poly.const(Fraction(piece.exact(point)), piece.dim)


def _blend(left: Piece, right: Piece, axis: int, a: Fraction, b: Fraction) -> Piece:
    """Linear interpolation along ``axis`` from ``left`` at ``a`` to ``right`` at ``b``."""
    la, rb = fix(left, axis, a), fix(right, axis, b)
    d = left.dim
    w = Poly((-a / (b - a), 1 / (b - a)), axis, d)
    one_minus_w = Poly((b / (b - a), -1 / (b - a)), axis, d)
    if isinstance(la, Poly) and isinstance(rb, Poly) and la.is_constant and rb.is_constant:
        return P.add(P.mul(one_minus_w, la), P.mul(w, rb))
    return P.add(P.mul(one_minus_w, la), P.mul(w, rb))


def interpolate_axis(pw: Piecewise, axis: int, gaps: Sequence[tuple], lo, hi) -> Piecewise:
    """Replace ``pw`` on each gap ``(a, b)`` inside ``(lo, hi)`` along ``axis``
    by the linear interpolation of the values at its ends."""
    # slabs through a box edge hold only the jump on that edge; inside the
    # box the pieces are already continuous up to the edge
    gaps = sorted((a, b) for a, b in gaps if lo < a and b < hi)
    if not gaps:
        return pw
    starts = [a for a, _ in gaps]

    def gap_index(x):
        i = bisect.bisect_right(starts, x) - 1
        return i if i >= 0 and x < gaps[i][1] else None

    old = pw.cuts[axis]
    kept = [c for c in old if (i := gap_index(c)) is None or c == gaps[i][0]]
    new_axis_cuts = sorted(set(kept) | {x for a, b in gaps for x in (a, b) if lo < x < hi})
    cuts = pw.cuts[:axis] + (tuple(new_axis_cuts),) + pw.cuts[axis + 1:]
    jumps = list(pw.jumps)
    jumps[axis] = frozenset(c for c in pw.jumps[axis] if c in set(kept))
    reps = [P._representatives(cs) for cs in cuts]

    def outside(a, b):
        # sample abscissae just beyond each end of the gap, before any other old cut
        j = bisect.bisect_left(old, a)
        left = a - ((a - old[j - 1]) / 2 if j > 0 else 1)
        j = bisect.bisect_right(old, b)
        right = b + ((old[j] - b) / 2 if j < len(old) else 1)
        return left, right

    ends = [outside(a, b) for a, b in gaps]
    which = []
    for x in reps[axis]:
        i = gap_index(x)
        which.append(None if i is not None and x == gaps[i][0] else i)
    pieces = {}
    for key in itertools.product(*(range(len(r)) for r in reps)):
        point = [reps[k][i] for k, i in enumerate(key)]
        g = which[key[axis]]
        if g is None:
            pieces[key] = pw.piece_at(point)
            continue
        a, b = gaps[g]
        left_pt = list(point)
        right_pt = list(point)
        left_pt[axis], right_pt[axis] = ends[g]
        pieces[key] = _blend(pw.piece_at(left_pt), pw.piece_at(right_pt), axis, a, b)
    return Piecewise(pw.dim, cuts, pieces, tuple(jumps))


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True, eq=False)
class QCFunction:
    domain: Rectangle
    regular: Piecewise
    exact_eval: Callable
    exceptional: tuple = ()
    bound: Fraction | None = None
    tags: frozenset = frozenset()
    name: str = "f"
    enclose_fn: Callable | None = None  # certified enclosure of the true function

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def characteristic(self) -> bool:
        return "characteristic" in self.tags

    @property
    def has_exceptions(self) -> bool:
        return bool(self.exceptional)

    # evaluation ------------------------------------------------------------
    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (tuple, list)):
            point = tuple(point[0])
        return self.exact_eval(tuple(point))

    def values(self, X) -> np.ndarray:
        """Float evaluation; floats stand for sampled (irrational) reals."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return self.regular.values(X)

    def enclose(self, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Bounds of the true function on each closed box ``[lo_i, hi_i]``."""
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        if lo.shape[0] == 1 and lo.shape[1] != self.dim:
            lo, hi = lo.T, hi.T
        if self.enclose_fn is not None:
            return self.enclose_fn(lo, hi)
        return _enclose_regular(self.regular, self.exceptional, lo, hi)

    # witness and associated functions -------------------------------------
    def witness(self, eps, box: Rectangle | None = None) -> Witness:
        eps = Fraction(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        return self._witness(eps, box or self.domain)

    def _witness(self, eps: Fraction, box: Rectangle) -> Witness:
        return leaf_witness(self.regular, self.exceptional, eps, box)

    def associated(self, eps, box: Rectangle) -> tuple[Witness, Piecewise]:
        """The witness of order ``eps`` and the continuous function that
        interpolates the regular part across its slabs inside ``box``."""
        w = self.witness(eps, box)
        g = self.regular
        for axis in range(self.dim):
            g = interpolate_axis(g, axis, w.gaps(axis), box.sides[axis].lo, box.sides[axis].hi)
        return w, g

    def jumps_in(self, box: Rectangle) -> list[tuple[int, Fraction]]:
        return [(k, c) for k in range(self.dim) for c in sorted(self.regular.jumps[k])
                if box.sides[k].lo < c < box.sides[k].hi]

    def stationary_on(self, box: Rectangle) -> bool:
        """True when the associated functions do not depend on the order."""
        return not self.jumps_in(box)

    def support_box(self) -> Rectangle | None:
        """Closed bounding box of the cells where the regular part is not
        identically zero, together with the exceptional sets (None if
        unbounded; an empty support gives a degenerate box)."""
        pw = self.regular
        lo = [math.inf] * self.dim
        hi = [-math.inf] * self.dim
        for key, piece in pw.pieces.items():
            if isinstance(piece, Poly) and piece.is_constant and piece.coeffs[0] == 0:
                continue
            for k, i in enumerate(key):
                cs = pw.cuts[k]
                side = self.domain.sides[k]
                a = cs[i - 1] if i > 0 else side.lo
                b = cs[i] if i < len(cs) else side.hi
                a, b = max(a, side.lo), min(b, side.hi)
                lo[k], hi[k] = min(lo[k], a), max(hi[k], b)
        for _ in self.exceptional:
            lo[0], hi[0] = min(lo[0], Fraction(0)), max(hi[0], Fraction(1))
        if all(v == math.inf for v in lo):
            z = Fraction(0)
            return Rectangle(tuple(Interval(z, z) for _ in range(self.dim)))
        if any(isinstance(v, float) for v in lo + hi):
            return None
        return Rectangle(tuple(Interval(a, b) for a, b in zip(lo, hi)))

    def restricted(self, domain: Rectangle) -> "QCFunction":
        if domain.dim != self.dim:
            raise DomainMismatch("dimension mismatch")
        return replace(self, domain=domain)

    def __repr__(self) -> str:
        return f"QCFunction({self.name})"


def _enclose_regular(pw: Piecewise, exceptional, lo, hi):
    low = np.full(len(lo), np.inf)
    high = np.full(len(lo), -np.inf)
    for key, piece in pw.pieces.items():
        clo, chi = lo.copy(), hi.copy()
        ok = np.ones(len(lo), dtype=bool)
        for k, i in enumerate(key):
            cs = pw._fcuts[k]
            a = cs[i - 1] if i > 0 else -np.inf
            b = cs[i] if i < len(cs) else np.inf
            clo[:, k] = np.maximum(clo[:, k], a)
            chi[:, k] = np.minimum(chi[:, k], b)
            ok &= clo[:, k] <= chi[:, k]
        if ok.any():
            pl, ph = piece.enclose(clo[ok], chi[ok])
            low[ok] = np.minimum(low[ok], pl)
            high[ok] = np.maximum(high[ok], ph)
    for exc in exceptional:
        el, eh = exc.range_on_cells(lo[:, 0], hi[:, 0])
        low, high = np.minimum(low, el), np.maximum(high, eh)
    # outward rounding
    low = low - 1e-14 * (1 + np.abs(low))
    high = high + 1e-14 * (1 + np.abs(high))
    return low, high


def leaf_witness(pw: Piecewise, exceptional, eps: Fraction, box: Rectangle) -> Witness:
    d = pw.dim
    jumps = [(k, c) for k in range(d) for c in sorted(pw.jumps[k])
             if box.sides[k].lo <= c <= box.sides[k].hi]
    parts = int(bool(jumps)) + len(exceptional)
    if parts == 0:
        return Witness(d, box)
    share = eps / parts
    slabs = []
    if jumps:
        if d > 1 and not box.bounded:
            raise UnboundedSet("jump slabs need a bounded box in dimension > 1")
        for k, c in jumps:
            budget = share / len(jumps)
            vol = _other_volume(box, k) if d > 1 else Fraction(1)
            delta = budget / (4 * vol)
            # keep slabs clear of neighbouring cuts and box edges so that
            # symmetric interpolation reproduces piecewise-constant integrals
            cs = pw.cuts[k]
            j = bisect.bisect_left(cs, c)
            near = [abs(c - cs[i]) for i in (j - 1, j, j + 1) if 0 <= i < len(cs) and cs[i] != c]
            near += [abs(c - e) for e in (box.sides[k].lo, box.sides[k].hi)
                     if not isinstance(e, float) and e != c]
            if near:
                delta = min(delta, min(near) / 4)
            slabs.append((k, c, delta))
    covers = tuple(exc.cover(share) for exc in exceptional)
    return Witness(d, box, tuple(slabs), covers)


# ---------------------------------------------------------------------------
# algebra


_PIECE_OPS = {
    "sum": P.add,
    "product": P.mul,
    "max": lambda a, b: P.extremum(a, b, True),
    "min": lambda a, b: P.extremum(a, b, False),
}

_VALUE_OPS = {"sum": operator.add, "product": operator.mul, "max": max, "min": min}


def _interval_op(op: str, la, ha, lb, hb):
    if op == "sum":
        return la + lb, ha + hb
    if op == "product":
        with np.errstate(invalid="ignore"):
            c = np.stack([la * lb, la * hb, ha * lb, ha * hb])
        c = np.nan_to_num(c, nan=0.0)
        return c.min(axis=0), c.max(axis=0)
    if op == "max":
        return np.maximum(la, lb), np.maximum(ha, hb)
    return np.minimum(la, lb), np.minimum(ha, hb)


def _bound_op(op: str, a, b):
    if a is None or b is None:
        return None
    if op == "sum":
        return a + b
    if op == "product":
        return a * b
    return max(a, b)


def _common_domain(f: QCFunction, g: QCFunction) -> Rectangle:
    if f.dim != g.dim:
        raise DomainMismatch(f"dimension mismatch: {f.dim} vs {g.dim}")
    if f.domain == g.domain:
        return f.domain
    inter = f.domain.intersect(g.domain)
    if inter is None or inter not in (f.domain, g.domain) and not _same_box(inter, f.domain, g.domain):
        raise DomainMismatch(f"domains {f.domain} and {g.domain} are not nested")
    return inter


def _same_box(inter, a, b) -> bool:
    return any(all(s.lo == t.lo and s.hi == t.hi for s, t in zip(inter.sides, r.sides)) for r in (a, b))


def combine(op: str, f: QCFunction, g: QCFunction) -> QCFunction:
    """Pointwise ``sum``, ``product``, ``max`` or ``min`` of two descriptors.

    The witness of order ``eps`` is the union of the operands' witnesses
    of order ``eps/2``.
    """
    if op not in _PIECE_OPS:
        raise ValueError(f"unknown operation {op!r}")
    domain = _common_domain(f, g)
    regular = f.regular.combine(g.regular, _PIECE_OPS[op])
    vop = _VALUE_OPS[op]

    def exact_eval(p):
        return vop(f.exact_eval(p), g.exact_eval(p))

    def enclose_fn(lo, hi):
        la, ha = f.enclose(lo, hi)
        lb, hb = g.enclose(lo, hi)
        return _interval_op(op, la, ha, lb, hb)

    tags = _sign_tags(op, _sign(f), _sign(g))
    if f.characteristic and g.characteristic and op in ("product", "max", "min"):
        tags.add("characteristic")
    bound = _bound_op(op, f.bound, g.bound)
    if bound is not None:
        tags.add("bounded")
    return _Combined(domain, regular, exact_eval, f.exceptional + g.exceptional, bound,
                     frozenset(tags), f"{op}({f.name},{g.name})", enclose_fn, (f, g))


def _sign(f: QCFunction) -> set:
    return {t for t in ("nonnegative", "nonpositive") if t in f.tags}


def _sign_tags(op: str, a: set, b: set) -> set:
    nn, np_ = "nonnegative", "nonpositive"
    out = set()
    if op == "sum":
        out = a & b
    elif op == "product":
        if (nn in a and nn in b) or (np_ in a and np_ in b):
            out.add(nn)
        if (nn in a and np_ in b) or (np_ in a and nn in b):
            out.add(np_)
    elif op == "max":
        if nn in a or nn in b:
            out.add(nn)
        if np_ in a and np_ in b:
            out.add(np_)
    else:
        if nn in a and nn in b:
            out.add(nn)
        if np_ in a or np_ in b:
            out.add(np_)
    return out


@dataclass(frozen=True, eq=False)
class _Combined(QCFunction):
    children: tuple = ()

    def _witness(self, eps, box):
        return self.children[0]._witness(eps / 2, box) | self.children[1]._witness(eps / 2, box)


@dataclass(frozen=True, eq=False)
class _Unary(QCFunction):
    child: QCFunction | None = None

    def _witness(self, eps, box):
        return self.child._witness(eps, box)


def constant(c, domain: Rectangle) -> QCFunction:
    c = Fraction(c)
    return QCFunction(domain, Piecewise.single(Poly.const(c, domain.dim)), lambda p: c,
                      bound=abs(c), tags=frozenset({"bounded", "exact"} | ({"nonnegative"} if c >= 0 else set())
                                                     | ({"nonpositive"} if c <= 0 else set())
                                                     | ({"characteristic"} if c in (0, 1) else set())),
                      name=str(c))


def scale(c, f: QCFunction) -> QCFunction:
    return combine("product", constant(c, f.domain), f)


def negate(f: QCFunction) -> QCFunction:
    return scale(-1, f)


def _crossings_1d(pw: Piecewise, level: Fraction) -> list[Fraction]:
    """Cut points isolating where 1D pieces cross ``level``."""
    if pw.dim != 1:
        return []
    extra = []
    reps = P._representatives(pw.cuts[0])
    cs = pw.cuts[0]
    for i, rep in enumerate(reps):
        piece = pw.pieces[(i,)]
        a = cs[i - 1] if i > 0 else None
        b = cs[i] if i < len(cs) else None
        if isinstance(piece, Poly):
            if piece.degree == 0:
                continue
            if piece.degree == 1:
                c1, c0 = piece.coeffs[1], piece.coeffs[0]
                roots = [(level - c0) / c1]
            else:
                coeffs = np.array([float(c) for c in reversed(piece.coeffs)])
                coeffs[-1] -= float(level)
                rr = np.roots(coeffs)
                roots = []
                for r in rr[np.abs(rr.imag) < 1e-12].real:
                    q = Fraction(float(r))
                    w = Fraction(1, 10**12) * (1 + abs(q))
                    roots += [q - w, q + w]
            extra += [r for r in roots if (a is None or r > a) and (b is None or r < b)]
        elif isinstance(piece, (P.RPow, P.Exp)) and a is not None or isinstance(piece, P.Exp):
            lo = float(a) if a is not None else -1e6
            hi = float(b) if b is not None else 1e6
            if isinstance(piece, P.RPow):
                if float(level) <= 0:
                    continue
                r = float(level) ** (1 / float(piece.p)) if piece.p != 0 else None
            else:
                r = math.log(float(level)) / float(piece.rate) if float(level) > 0 else None
            if r is None or not (lo < r < hi):
                continue
            q = Fraction(r)
            w = Fraction(1, 10**12) * (1 + abs(q))
            extra += [x for x in (q - w, q + w) if (a is None or x > a) and (b is None or x < b)]
    return extra


def refine(pw: Piecewise, extra: Sequence[Fraction]) -> Piecewise:
    """Add non-jump cuts on axis 0 without changing the function."""
    extra = [Fraction(x) for x in extra if x not in pw.cuts[0]]
    if not extra:
        return pw
    cuts = (tuple(sorted(set(pw.cuts[0]) | set(extra))),) + pw.cuts[1:]
    reps = [P._representatives(cs) for cs in cuts]
    import itertools
    pieces = {}
    for key in itertools.product(*(range(len(r)) for r in reps)):
        point = tuple(reps[k][i] for k, i in enumerate(key))
        pieces[key] = pw.piece_at(point)
    return Piecewise(pw.dim, cuts, pieces, pw.jumps)


def truncate(f: QCFunction, mode: str, N) -> QCFunction:
    """``max{f, N}`` (``mode='plus'``) or ``min{f, N}`` (``mode='minus'``).

    Infinite ``N`` leaves ``f`` unchanged.  The witness is that of ``f``.
    """
    if mode not in ("plus", "minus"):
        raise ValueError("mode must be 'plus' or 'minus'")
    if isinstance(N, float) and math.isinf(N):
        return f
    N = Fraction(N)
    upper = mode == "plus"
    level = Poly.const(N, f.dim)
    pw = refine(f.regular, _crossings_1d(f.regular, N)) if f.dim == 1 else f.regular
    regular = pw.map(lambda piece: P.extremum(piece, level, upper))
    pick = max if upper else min

    def exact_eval(p):
        return pick(f.exact_eval(p), N)

    def enclose_fn(lo, hi):
        a, b = f.enclose(lo, hi)
        g = np.maximum if upper else np.minimum
        return g(a, float(N)), g(b, float(N))

    bound = None if f.bound is None else max(f.bound, abs(N))
    if not upper and f.bound is None and N >= 0 and "nonnegative" in f.tags:
        bound = N
    if upper and f.bound is None and N <= 0 and _nonpositive(f):
        bound = -N
    tags = set(f.tags) - {"characteristic"}
    if upper and N >= 0:
        tags.add("nonnegative")
    if upper and N > 0:
        tags.discard("nonpositive")
    if not upper and N <= 0:
        tags.add("nonpositive")
    if not upper and N < 0:
        tags.discard("nonnegative")
    return _Unary(f.domain, regular, exact_eval, f.exceptional, bound, frozenset(tags),
                  f"trunc{'+' if upper else '-'}({f.name},{N})", enclose_fn, f)


def _nonpositive(f: QCFunction) -> bool:
    return "nonpositive" in f.tags


def clip(f: QCFunction, lo, hi) -> QCFunction:
    """``min{max{f, lo}, hi}`` with the same witness as ``f``."""
    out = f
    if lo is not None:
        out = truncate(out, "plus", lo)
    if hi is not None:
        out = truncate(out, "minus", hi)
    return out


def abs_value(f: QCFunction) -> QCFunction:
    return combine("max", f, negate(f))


def restrict_to_set(f: QCFunction, A: QCFunction) -> QCFunction:
    """``f * 1_A`` for a characteristic descriptor ``A``."""
    if not A.characteristic:
        raise NotCharacteristic(f"{A.name} is not a characteristic function")
    return combine("product", f, A)


def tensor(f: QCFunction, g: QCFunction) -> QCFunction:
    """``(x, y) -> f(x) g(y)`` on the product of the domains."""
    df, dg = f.dim, g.dim
    domain = Rectangle(f.domain.sides + g.domain.sides)
    d = df + dg

    def lift(pw: Piecewise, offset: int) -> Piecewise:
        import itertools
        cuts = [()] * d
        jumps = [frozenset()] * d
        for k in range(pw.dim):
            cuts[offset + k] = pw.cuts[k]
            jumps[offset + k] = pw.jumps[k]
        pieces = {}
        for key, piece in pw.pieces.items():
            full = [0] * d
            for k in range(pw.dim):
                full[offset + k] = key[k]
            pieces[tuple(full)] = _shift(piece, offset, d)
        return Piecewise(d, tuple(cuts), pieces, tuple(jumps))

    lf, lg = lift(f.regular, 0), lift(g.regular, df)
    regular = lf.combine(lg, P.mul)
    if f.exceptional or g.exceptional:
        raise NotImplementedError("tensor products of functions with exceptional sets")

    def exact_eval(p):
        return f.exact_eval(tuple(p[:df])) * g.exact_eval(tuple(p[df:]))

    def enclose_fn(lo, hi):
        la, ha = f.enclose(lo[:, :df], hi[:, :df])
        lb, hb = g.enclose(lo[:, df:], hi[:, df:])
        return _interval_op("product", la, ha, lb, hb)

    tags = {"bounded"} if f.bound is not None and g.bound is not None else set()
    if "nonnegative" in f.tags and "nonnegative" in g.tags:
        tags.add("nonnegative")
    if f.characteristic and g.characteristic:
        tags.add("characteristic")
    bound = None if f.bound is None or g.bound is None else f.bound * g.bound
    return QCFunction(domain, regular, exact_eval, (), bound, frozenset(tags),
                      f"prod({f.name};{g.name})", enclose_fn)


def _shift(piece: Piece, offset: int, d: int) -> Piece:
    """Re-home a piece to dimension ``d`` with its axes shifted by ``offset``."""
    if isinstance(piece, Poly):
        return Poly(piece.coeffs, piece.axis + offset if piece.degree else 0, d)
    if isinstance(piece, P.CosPower):
        return P.CosPower(piece.m, piece.n, piece.axis + offset, d)
    if isinstance(piece, P.Exp):
        return P.Exp(piece.rate, piece.axis + offset, d)
    if isinstance(piece, P.RPow):
        return P.RPow(piece.p, piece.axis + offset, d)
    if isinstance(piece, P.Sum):
        return P.add(_shift(piece.a, offset, d), _shift(piece.b, offset, d))
    if isinstance(piece, P.Prod):
        return P.mul(_shift(piece.a, offset, d), _shift(piece.b, offset, d))
    if isinstance(piece, P.Extremum):
        return P.extremum(_shift(piece.a, offset, d), _shift(piece.b, offset, d), piece.upper)
    raise TypeError(f"cannot lift {piece!r}")


# ---------------------------------------------------------------------------
# sequences


@dataclass(frozen=True, eq=False)
class QCSequence:
    """Members ``f_n`` for ``n >= start`` on a common domain."""

    generator: Callable[[int], QCFunction]
    domain: Rectangle
    start: int = 1
    name: str = "seq"
    limit: QCFunction | None = None

    def __call__(self, n: int) -> QCFunction:
        if n < self.start:
            raise ValueError(f"sequence starts at n={self.start}")
        return self.generator(n)

    def shared_witness(self, eps, upto: int, box: Rectangle | None = None) -> Witness:
        """``union_n witness_n(eps / 2**n)`` over ``start <= n <= upto``."""
        eps = Fraction(eps)
        out = None
        for n in range(self.start, upto + 1):
            w = self(n).witness(eps / 2 ** n, box)
            out = w if out is None else out | w
        return out
