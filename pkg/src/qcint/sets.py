"""Intervals, rectangles and multirectangles with exact rational endpoints.

A *multirectangle* is a sequence of axis-aligned rectangles.  Its length
``L`` is the sum of the component volumes, duplicates included, while the
Lebesgue measure of the point set it covers is computed separately by
:func:`union_measure`.  Countably infinite multirectangles are represented
by a finite explicit part plus a :class:`CountableCover` tail whose total
length is known in closed form.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .rational import INF, format_rational, parse_extended

Point = tuple  # tuple of Fraction (exact) or float (sampled real)


class UnboundedSet(ValueError):
    """Raised when a set is not contained in the supplied bounding box."""


class Topology(enum.Enum):
    OPEN = "open"
    CLOSED = "closed"
    HALF_OPEN_LO = "half-open-lo"  # (lo, hi]
    HALF_OPEN_HI = "half-open-hi"  # [lo, hi)

    @property
    def closed_lo(self) -> bool:
        return self in (Topology.CLOSED, Topology.HALF_OPEN_HI)

    @property
    def closed_hi(self) -> bool:
        return self in (Topology.CLOSED, Topology.HALF_OPEN_LO)


_BRACKETS = {
    ("(", ")"): Topology.OPEN,
    ("[", "]"): Topology.CLOSED,
    ("(", "]"): Topology.HALF_OPEN_LO,
    ("[", ")"): Topology.HALF_OPEN_HI,
}


@dataclass(frozen=True)
class Interval:
    lo: Fraction | float
    hi: Fraction | float
    topology: Topology = Topology.CLOSED

    def __post_init__(self):
        lo, hi = self.lo, self.hi
        if not isinstance(lo, float):
            object.__setattr__(self, "lo", Fraction(lo))
        elif not math.isinf(lo):
            raise TypeError("finite interval endpoints must be exact rationals")
        if not isinstance(hi, float):
            object.__setattr__(self, "hi", Fraction(hi))
        elif not math.isinf(hi):
            raise TypeError("finite interval endpoints must be exact rationals")
        if self.lo > self.hi:
            raise ValueError(f"interval with lo > hi: {self.lo} > {self.hi}")

    @classmethod
    def open(cls, lo, hi) -> "Interval":
        return cls(lo, hi, Topology.OPEN)

    @classmethod
    def closed(cls, lo, hi) -> "Interval":
        return cls(lo, hi, Topology.CLOSED)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        s = text.strip()
        if len(s) < 5 or (s[0], s[-1]) not in _BRACKETS:
            raise ValueError(f"bad interval literal {text!r}")
        parts = s[1:-1].split(",")
        if len(parts) != 2:
            raise ValueError(f"bad interval literal {text!r}")
        return cls(parse_extended(parts[0]), parse_extended(parts[1]), _BRACKETS[(s[0], s[-1])])

    @property
    def bounded(self) -> bool:
        return not (isinstance(self.lo, float) or isinstance(self.hi, float))

    @property
    def length(self) -> Fraction | float:
        if not self.bounded:
            return INF
        return self.hi - self.lo

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.topology.closed_lo:
            return False
        if x == self.hi and not self.topology.closed_hi:
            return False
        return True

    def with_topology(self, topology: Topology) -> "Interval":
        return Interval(self.lo, self.hi, topology)

    def __str__(self) -> str:
        left = "[" if self.topology.closed_lo else "("
        right = "]" if self.topology.closed_hi else ")"
        return f"{left}{format_rational(self.lo)},{format_rational(self.hi)}{right}"


@dataclass(frozen=True)
class Rectangle:
    sides: tuple[Interval, ...]

    def __post_init__(self):
        object.__setattr__(self, "sides", tuple(self.sides))
        if not self.sides:
            raise ValueError("a rectangle needs at least one side")

    @classmethod
    def of(cls, *sides: Interval) -> "Rectangle":
        return cls(tuple(sides))

    @classmethod
    def box(cls, lo: Sequence, hi: Sequence, topology: Topology = Topology.CLOSED) -> "Rectangle":
        return cls(tuple(Interval(a, b, topology) for a, b in zip(lo, hi)))

    @classmethod
    def parse(cls, text: str) -> "Rectangle":
        """Parse ``"[0,1]x(0,2)"`` style literals."""
        pieces = re.findall(r"[\[(][^\[\]()]*[\])]", text)
        if not pieces:
            raise ValueError(f"bad rectangle literal {text!r}")
        return cls(tuple(Interval.parse(p) for p in pieces))

    @property
    def dim(self) -> int:
        return len(self.sides)

    @property
    def bounded(self) -> bool:
        return all(s.bounded for s in self.sides)

    @property
    def volume(self) -> Fraction | float:
        if any(s.degenerate for s in self.sides):
            return Fraction(0)
        if not self.bounded:
            return INF
        v = Fraction(1)
        for s in self.sides:
            v *= s.length
        return v

    @property
    def lo(self) -> tuple:
        return tuple(s.lo for s in self.sides)

    @property
    def hi(self) -> tuple:
        return tuple(s.hi for s in self.sides)

    @property
    def is_open(self) -> bool:
        return all(s.topology is Topology.OPEN for s in self.sides)

    @property
    def is_closed(self) -> bool:
        return all(s.topology is Topology.CLOSED for s in self.sides)

    def contains(self, point: Sequence) -> bool:
        return all(s.contains(x) for s, x in zip(self.sides, point))

    def with_topology(self, topology: Topology) -> "Rectangle":
        return Rectangle(tuple(s.with_topology(topology) for s in self.sides))

    def interior_meets(self, other: "Rectangle") -> bool:
        """True when the interiors of the two rectangles intersect."""
        return all(max(a.lo, b.lo) < min(a.hi, b.hi) for a, b in zip(self.sides, other.sides))

    def closure_within(self, other: "Rectangle") -> bool:
        return all(o.lo <= s.lo and s.hi <= o.hi for s, o in zip(self.sides, other.sides))

    def intersect(self, other: "Rectangle") -> "Rectangle | None":
        """Closed-hull intersection (topology: closed); None if empty."""
        sides = []
        for a, b in zip(self.sides, other.sides):
            lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
            if lo > hi:
                return None
            sides.append(Interval(lo, hi, Topology.CLOSED))
        return Rectangle(tuple(sides))

    def distance_sq(self, point: Sequence) -> Fraction:
        """Squared Euclidean distance from an exact point to the closure."""
        d = Fraction(0)
        for s, x in zip(self.sides, point):
            if x < s.lo:
                d += (s.lo - x) ** 2
            elif x > s.hi:
                d += (x - s.hi) ** 2
        return d

    def nearest_point(self, point: Sequence) -> tuple:
        return tuple(min(max(x, s.lo), s.hi) for s, x in zip(self.sides, point))

    def __str__(self) -> str:
        return "x".join(str(s) for s in self.sides)


@dataclass(frozen=True)
class CountableCover:
    """Open intervals centred on an enumerated countable set.

    Interval ``n`` (1-indexed) is centred at ``points(n)`` and has length
    ``budget / 2**(n+1)``, so the infinite cover has total length
    ``budget / 2``.  ``member`` decides membership in the countable set for
    exact points, which makes coverage of those points decidable.
    """

    name: str
    budget: Fraction
    points: Callable[[int], Fraction]
    member: Callable[[object], bool]
    scan: int = 64

    @property
    def length(self) -> Fraction:
        return self.budget / 2

    def component(self, n: int) -> Interval:
        q = self.points(n)
        half = self.budget / 2 ** (n + 2)
        return Interval(q - half, q + half, Topology.OPEN)

    def truncation(self, count: int) -> list[Interval]:
        return [self.component(n) for n in range(1, count + 1)]

    def covers(self, x) -> bool:
        """Exact for members of the set; otherwise only the first ``scan``
        intervals are checked (a semi-decision)."""
        if not isinstance(x, float) and self.member(x):
            return True
        return any(iv.contains(x) for iv in self.truncation(self.scan))

    def scaled(self, budget) -> "CountableCover":
        return CountableCover(self.name, Fraction(budget), self.points, self.member, self.scan)


@dataclass(frozen=True)
class Multirectangle:
    components: tuple[Rectangle, ...] = ()
    tail: tuple[CountableCover, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "tail", tuple(self.tail))
        dims = {r.dim for r in self.components}
        if len(dims) > 1:
            raise ValueError("components of a multirectangle must share one dimension")

    @classmethod
    def of(cls, *rects: Rectangle) -> "Multirectangle":
        return cls(tuple(rects))

    @classmethod
    def intervals(cls, *ivs: Interval) -> "Multirectangle":
        return cls(tuple(Rectangle((iv,)) for iv in ivs))

    @classmethod
    def from_json(cls, text: str) -> "Multirectangle":
        data = json.loads(text)
        rects = []
        for item in data:
            if isinstance(item, str):
                item = [item]
            rects.append(Rectangle(tuple(Interval.parse(s) for s in item)))
        return cls(tuple(rects))

    def to_json(self) -> str:
        return json.dumps([[str(s) for s in r.sides] for r in self.components])

    @property
    def dim(self) -> int | None:
        return self.components[0].dim if self.components else None

    @property
    def finite(self) -> bool:
        return not self.tail

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[Rectangle]:
        return iter(self.components)

    def __add__(self, other: "Multirectangle") -> "Multirectangle":
        return Multirectangle(self.components + other.components, self.tail + other.tail)

    @property
    def is_open(self) -> bool:
        return all(r.is_open for r in self.components)

    @property
    def is_closed(self) -> bool:
        return all(r.is_closed for r in self.components)

    @property
    def is_disjoint(self) -> bool:
        return _pairwise(self.components, _closed_sets_meet) is None

    @property
    def is_almost_disjoint(self) -> bool:
        return _pairwise(self.components, Rectangle.interior_meets) is None

    def contains(self, point: Sequence) -> bool:
        if any(r.contains(point) for r in self.components):
            return True
        if self.tail and len(point) == 1:
            return any(c.covers(point[0]) for c in self.tail)
        return False


def _closed_sets_meet(a: Rectangle, b: Rectangle) -> bool:
    # topology-aware intersection test
    for s, t in zip(a.sides, b.sides):
        lo, hi = max(s.lo, t.lo), min(s.hi, t.hi)
        if lo > hi:
            return False
        if lo == hi and not (s.contains(lo) and t.contains(lo)):
            return False
    return True


def _pairwise(items, pred):
    for a, b in itertools.combinations(items, 2):
        if pred(a, b):
            return (a, b)
    return None


# ---------------------------------------------------------------------------
# lengths and measures


def length(delta: Multirectangle) -> Fraction | float:
    """``L(delta)``: the exact sum of component volumes (duplicates count)."""
    total: Fraction | float = Fraction(0)
    for r in delta.components:
        total = total + r.volume
    for cover in delta.tail:
        total = total + cover.length
    return total


def merge_1d(ivs: Iterable[Interval]) -> list[Interval]:
    """Merge intervals into disjoint ones covering the same point set.

    Endpoint topology is tracked exactly, so ``(0,1)`` and ``(1,2)`` stay
    apart while ``(0,1]`` and ``(1,2)`` merge.
    """
    items = sorted(
        (iv for iv in ivs if not (iv.degenerate and iv.topology is not Topology.CLOSED)),
        key=lambda iv: (iv.lo, not iv.topology.closed_lo),
    )
    out: list[Interval] = []
    for iv in items:
        if out:
            last = out[-1]
            touching = iv.lo < last.hi or (
                iv.lo == last.hi and (last.topology.closed_hi or iv.topology.closed_lo)
            )
            if touching:
                if iv.hi > last.hi:
                    hi, closed_hi = iv.hi, iv.topology.closed_hi
                elif iv.hi == last.hi:
                    hi, closed_hi = last.hi, last.topology.closed_hi or iv.topology.closed_hi
                else:
                    hi, closed_hi = last.hi, last.topology.closed_hi
                out[-1] = Interval(last.lo, hi, _topology(last.topology.closed_lo, closed_hi))
                continue
        out.append(iv)
    return out


def _topology(closed_lo: bool, closed_hi: bool) -> Topology:
    if closed_lo and closed_hi:
        return Topology.CLOSED
    if closed_lo:
        return Topology.HALF_OPEN_HI
    if closed_hi:
        return Topology.HALF_OPEN_LO
    return Topology.OPEN


def disjointify_1d(delta: Multirectangle) -> Multirectangle:
    """Merge the open components of a multiinterval into disjoint ones."""
    if not delta.components:
        return Multirectangle((), delta.tail)
    if delta.dim != 1:
        raise ValueError("disjointify_1d needs a multiinterval")
    if not delta.is_open:
        raise ValueError("disjointify_1d needs open components")
    merged = merge_1d(r.sides[0] for r in delta.components)
    return Multirectangle.intervals(*merged)


def union_measure(rects: Iterable[Rectangle]) -> Fraction | float:
    """Exact Lebesgue measure of a finite union of rectangles.

    Coordinate compression: the union is a union of cells of the grid
    spanned by all endpoints, and each open cell is either inside a
    rectangle's interior or disjoint from it.
    """
    rects = [r for r in rects if r.volume != 0]
    if not rects:
        return Fraction(0)
    if any(not r.bounded for r in rects):
        return INF
    d = rects[0].dim
    if d == 1:
        return sum((iv.length for iv in merge_1d(r.sides[0] for r in rects)), Fraction(0))
    grids = [sorted({x for r in rects for x in (r.sides[k].lo, r.sides[k].hi)}) for k in range(d)]
    # sweep the first axis; recurse on (d-1)-dimensional slabs
    total = Fraction(0)
    xs = grids[0]
    for a, b in zip(xs, xs[1:]):
        mid = (a + b) / 2
        slab = [Rectangle(r.sides[1:]) for r in rects if r.sides[0].lo < mid < r.sides[0].hi]
        if slab:
            total += (b - a) * union_measure(slab)
    return total


def measure(delta: Multirectangle) -> Fraction | float:
    """Lebesgue measure of the point set covered by the finite part."""
    return union_measure(delta.components)


# ---------------------------------------------------------------------------
# open sets and dyadic decomposition


@dataclass(frozen=True)
class OpenSet:
    """A finite union of open rectangles."""

    rects: Multirectangle

    def __post_init__(self):
        if not all(r.is_open for r in self.rects.components):
            raise ValueError("open set descriptor needs open rectangles")

    @classmethod
    def of(cls, *rects: Rectangle) -> "OpenSet":
        return cls(Multirectangle(tuple(r.with_topology(Topology.OPEN) for r in rects)))

    @property
    def dim(self) -> int | None:
        return self.rects.dim

    def contains(self, point: Sequence) -> bool:
        return self.rects.contains(point)

    def measure(self) -> Fraction | float:
        return union_measure(self.rects.components)

    def contains_closed(self, cube: Rectangle) -> bool:
        """Exact test that the closed rectangle lies inside the union."""
        return _closed_box_covered(cube, self.rects.components)

    def meets_interior(self, cube: Rectangle) -> bool:
        return any(cube.interior_meets(r) for r in self.rects.components)


def _axis_cells(lo: Fraction, hi: Fraction, cuts: Iterable[Fraction]) -> list[Fraction]:
    """Representative points of the cells (points and open gaps) of [lo,hi]."""
    pts = sorted({lo, hi} | {c for c in cuts if lo < c < hi})
    reps = []
    for a, b in zip(pts, pts[1:]):
        reps.append(a)
        reps.append((a + b) / 2)
    reps.append(pts[-1])
    return reps


def _closed_box_covered(box: Rectangle, opens: Sequence[Rectangle]) -> bool:
    relevant = [r for r in opens
                if all(o.lo <= s.hi and s.lo <= o.hi for s, o in zip(box.sides, r.sides))]
    if not relevant:
        return False
    for r in relevant:
        if all(o.contains(s.lo) and o.contains(s.hi) for s, o in zip(box.sides, r.sides)):
            return True
    if len(relevant) == 1:
        return False
    axes = []
    for k, s in enumerate(box.sides):
        cuts = [x for r in relevant for x in (r.sides[k].lo, r.sides[k].hi)]
        axes.append(_axis_cells(s.lo, s.hi, cuts))
    for p in itertools.product(*axes):
        if not any(r.contains(p) for r in relevant):
            return False
    return True


def dyadic_decompose(open_set: OpenSet, max_depth: int, bbox: Rectangle) -> Multirectangle:
    """Closed almost-disjoint dyadic cubes inside an open set.

    Level 0 uses the unit cubes of the integer lattice that meet ``bbox``;
    at level ``j`` cubes of side ``2**-j`` whose closure lies in the set are
    retained, cubes meeting the set but not contained in it are split into
    ``2**d`` children, and the rest are dropped.  Levels ``0..max_depth``
    are processed breadth-first.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be nonnegative")
    if not bbox.bounded:
        raise UnboundedSet("bounding box must be bounded")
    for r in open_set.rects.components:
        if not r.closure_within(bbox):
            raise UnboundedSet(f"open rectangle {r} is not inside the bounding box {bbox}")
    if not open_set.rects.components:
        return Multirectangle()
    d = bbox.dim
    ranges = [range(math.floor(s.lo), math.ceil(s.hi) if s.hi > s.lo else math.floor(s.lo) + 1) for s in bbox.sides]
    queue = [tuple(Fraction(c) for c in corner) for corner in itertools.product(*ranges)]
    side = Fraction(1)
    kept: list[Rectangle] = []
    for level in range(max_depth + 1):
        nxt = []
        for corner in queue:
            cube = Rectangle(tuple(Interval(c, c + side) for c in corner))
            if not open_set.meets_interior(cube):
                continue
            if open_set.contains_closed(cube):
                kept.append(cube)
            elif level < max_depth:
                half = side / 2
                for offs in itertools.product((0, 1), repeat=d):
                    nxt.append(tuple(c + o * half for c, o in zip(corner, offs)))
        queue = nxt
        side /= 2
    return Multirectangle(tuple(kept))


# ---------------------------------------------------------------------------
# inner and outer approximations


def _inflate_step(rect: Rectangle, budget: Fraction) -> Fraction:
    """Largest sigma = budget/2**m (m >= 1) whose inflation stays within budget."""
    sigma = budget / 2
    while True:
        grown = Fraction(1)
        for s in rect.sides:
            grown *= s.length + 2 * sigma
        if grown - rect.volume <= budget:
            return sigma
        sigma /= 2


def outer_measure_bound(a: Multirectangle, eps) -> Multirectangle:
    """Open multirectangle covering ``a`` with ``L <= L(a) + eps``.

    Component ``k`` (0-indexed) may grow by at most ``eps / 2**(k+1)``.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    out = []
    for k, r in enumerate(a.components):
        if not r.bounded:
            raise ValueError("outer bound needs bounded components")
        sigma = _inflate_step(r, eps / 2 ** (k + 1))
        out.append(Rectangle(tuple(Interval(s.lo - sigma, s.hi + sigma, Topology.OPEN) for s in r.sides)))
    return Multirectangle(tuple(out))


def _deflate_step(rect: Rectangle, budget: Fraction) -> Fraction | None:
    sigma = budget / 2
    while sigma > 0:
        if all(s.length > 2 * sigma for s in rect.sides):
            shrunk = Fraction(1)
            for s in rect.sides:
                shrunk *= s.length - 2 * sigma
            if rect.volume - shrunk <= budget:
                return sigma
        elif rect.volume <= budget:
            return None
        sigma /= 2
    return None


def inner_measure_bound(a: Multirectangle, eps) -> Multirectangle:
    """Closed disjoint multirectangle inside ``a`` with ``L >= L(a) - eps``.

    Component ``k`` (0-indexed) may lose at most ``eps / 2**(k+1)`` of its
    volume.  Components too thin to shrink collapse to the singleton at
    their centre, which has length 0.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    out = []
    for k, r in enumerate(a.components):
        if not r.bounded:
            raise ValueError("inner bound needs bounded components")
        sigma = _deflate_step(r, eps / 2 ** (k + 1)) if r.volume > 0 else None
        if sigma is None:
            centre = tuple((s.lo + s.hi) / 2 for s in r.sides)
            out.append(Rectangle(tuple(Interval(c, c) for c in centre)))
        else:
            out.append(Rectangle(tuple(Interval(s.lo + sigma, s.hi - sigma) for s in r.sides)))
    return Multirectangle(tuple(out))


# ---------------------------------------------------------------------------
# sections


@dataclass(frozen=True)
class Section:
    rects: Multirectangle
    almost_disjoint: bool


def section(delta: Multirectangle, axis: int, c) -> Section:
    """Section of a multirectangle at coordinate ``axis == c``.

    Components whose side along ``axis`` contains ``c`` contribute the
    rectangle formed by their remaining sides.  At face values the result
    may fail to be almost disjoint; this is reported, not raised.
    """
    c = Fraction(c)
    out = []
    for r in delta.components:
        if r.sides[axis].contains(c):
            out.append(Rectangle(r.sides[:axis] + r.sides[axis + 1:]))
    rects = Multirectangle(tuple(out))
    return Section(rects, rects.is_almost_disjoint)


def breakpoints(delta: Multirectangle, axis: int) -> list[Fraction]:
    return sorted({x for r in delta.components for x in (r.sides[axis].lo, r.sides[axis].hi)})


def format_multirectangle(delta: Multirectangle) -> list[list[str]]:
    return [[str(s) for s in r.sides] for r in delta.components]
