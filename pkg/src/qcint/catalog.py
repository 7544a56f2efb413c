"""Built-in functions and the function DSL.

Grammar (whitespace is ignored)::

    expr     := call | atom
    call     := OP "(" expr (SEP expr)+ ")"     OP in sum, prod, max, min
              | UNARY "(" expr ")"             UNARY in neg, abs
              | TRUNC ":" number "(" expr ")"  TRUNC in tplus, tminus
    SEP      := "," | ";"
    atom     := NAME [":" params]
    params   := number ("," number)* | set
    set      := rect ("u" rect)*
    rect     := interval ("x" interval)*
    interval := ("(" | "[") number "," number (")" | "]")
    number   := rational literal such as 3, -1/8, 0.25, inf, or the index n

Arguments separated by ``,`` are combined pointwise on a common domain.
Arguments separated by ``;`` are combined as a tensor product over
consecutive coordinate blocks, so ``prod(poly:0,1;poly:0,1)`` is ``xy``.
A parameter written ``n`` makes the expression a sequence template.
"""

from __future__ import annotations

import math
import re

import numpy as np
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from . import pieces as P
from .pieces import Piecewise, Poly
from .qc import (FinitePoints, QCFunction, QCSequence, UnitRationals, abs_value, combine,
                 constant, negate, tensor, truncate)
from .rational import INF, parse_extended, rational_enumeration
from .sets import Interval, Multirectangle, Rectangle, Topology, union_measure


class UnknownName(ValueError):
    pass


class BadParams(ValueError):
    pass


def _real_line(d: int = 1) -> Rectangle:
    return Rectangle(tuple(Interval(-INF, INF, Topology.OPEN) for _ in range(d)))


UNIT = Rectangle.of(Interval(0, 1))
HALF_LINE = Rectangle.of(Interval(0, INF, Topology.HALF_OPEN_HI))


def _line(cuts, values, jumps=None, d: int = 1) -> Piecewise:
    return Piecewise.line(cuts, [v if isinstance(v, P.Piece) else Poly.const(v) for v in values], jumps)


def _exact(x) -> bool:
    return not isinstance(x, float)


def _bounded_tags(nonneg: bool, extra=()) -> frozenset:
    tags = {"bounded"} | set(extra)
    if nonneg:
        tags.add("nonnegative")
    return frozenset(tags)


# ---------------------------------------------------------------------------
# entries


def dirichlet() -> QCFunction:
    """1 on rationals of [0,1], 0 elsewhere.

    Witness: a geometric cover of an enumeration of the rationals; off it
    the function is identically 0.
    """
    exc = UnitRationals(thomae=False)
    return QCFunction(UNIT, Piecewise.single(Poly.const(0)),
                      lambda p: Fraction(1) if _exact(p[0]) and 0 <= p[0] <= 1 else Fraction(0),
                      (exc,), Fraction(1), _bounded_tags(True, {"characteristic"}), "dirichlet")


def thomae() -> QCFunction:
    """1/q at p/q in lowest terms, 0 at irrationals."""
    exc = UnitRationals(thomae=True)

    def ev(p):
        x = p[0]
        return Fraction(1, Fraction(x).denominator) if _exact(x) and 0 <= x <= 1 else Fraction(0)

    return QCFunction(UNIT, Piecewise.single(Poly.const(0)), ev, (exc,), Fraction(1),
                      _bounded_tags(True), "thomae")


def qn_indicator(n: int) -> QCFunction:
    """Indicator of the first ``n`` rationals of the fixed enumeration."""
    n = _positive_int(n, "qn-indicator")
    pts = tuple(rational_enumeration.prefix(n))
    exc = FinitePoints(tuple((q, Fraction(1)) for q in pts))
    members = frozenset(pts)
    return QCFunction(UNIT, Piecewise.single(Poly.const(0)),
                      lambda p: Fraction(1) if _exact(p[0]) and Fraction(p[0]) in members else Fraction(0),
                      (exc,), Fraction(1), _bounded_tags(True, {"characteristic"}), f"qn-indicator:{n}")


def cos_power(m: int, n: int) -> QCFunction:
    """``cos(m! pi x)**(2n)`` on [0,1] (continuous, empty witness)."""
    m = _nonneg_int(m, "cos-power")
    n = _nonneg_int(n, "cos-power")
    piece = P.CosPower(m, n)
    return QCFunction(UNIT, Piecewise.single(piece), lambda p: piece.exact(p), (), Fraction(1),
                      _bounded_tags(True), f"cos-power:{m},{n}")


def _interval_indicator(domain: Rectangle, a, b, height, topo: Topology, name: str) -> QCFunction:
    iv = Interval(a, b, topo)
    height = Fraction(height)
    pw = _line([a, b], [0, height, 0])

    def ev(p):
        return height if iv.contains(p[0]) else Fraction(0)

    return QCFunction(domain, pw, ev, (), abs(height), _bounded_tags(height >= 0), name)


def spike(n: int) -> QCFunction:
    """``n`` on (1/n, 2/n], 0 elsewhere in [0,1]; integral 1 for n >= 2."""
    n = _positive_int(n, "spike")
    if n < 2:
        raise BadParams("spike:n needs n >= 2 (the support (1/n,2/n] must lie in [0,1])")
    return _interval_indicator(UNIT, Fraction(1, n), Fraction(2, n), n, Topology.HALF_OPEN_LO, f"spike:{n}")


def wide_spike(n: int) -> QCFunction:
    """``1/n`` on (n, 2n] in [0, inf); integral 1."""
    n = _positive_int(n, "wide-spike")
    return _interval_indicator(HALF_LINE, n, 2 * n, Fraction(1, n), Topology.HALF_OPEN_LO, f"wide-spike:{n}")


def tail_indicator(n) -> QCFunction:
    """Indicator of [n, inf) on [0, inf)."""
    n = Fraction(n)
    pw = _line([n], [0, 1])
    return QCFunction(HALF_LINE, pw, lambda p: Fraction(1) if p[0] >= n else Fraction(0), (),
                      Fraction(1), _bounded_tags(True, {"characteristic"}), f"tail-indicator:{n}")


def trapezoid(n: int) -> QCFunction:
    """Travelling trapezoid on (0, inf): 1 on [n-1, n+1], ramps of width 1."""
    n = _positive_int(n, "trapezoid")
    cuts = [n - 2, n - 1, n + 1, n + 2]
    up = Poly((Fraction(-(n - 2)), 1))
    down = Poly((Fraction(n + 2), -1))
    pw = _line(cuts, [0, up, 1, down, 0], jumps=[])

    def ev(p):
        x = Fraction(p[0]) if _exact(p[0]) else p[0]
        if x <= n - 2 or x >= n + 2:
            return Fraction(0) if _exact(x) else 0.0
        if x <= n - 1:
            return x - (n - 2)
        if x <= n + 1:
            return Fraction(1) if _exact(x) else 1.0
        return n + 2 - x

    domain = Rectangle.of(Interval(0, INF, Topology.OPEN))
    return QCFunction(domain, pw, ev, (), Fraction(1), _bounded_tags(True), f"trapezoid:{n}")


def step(h, hh, k, f1, f2) -> QCFunction:
    """``f1`` on [h, hh), ``f2`` on [hh, k]."""
    h, hh, k, f1, f2 = (Fraction(v) for v in (h, hh, k, f1, f2))
    if not h <= hh <= k or h == k:
        raise BadParams("step needs h <= hh <= k and h < k")
    pw = _line([hh], [f1, f2])
    return QCFunction(Rectangle.of(Interval(h, k)), pw, lambda p: f1 if p[0] < hh else f2, (),
                      max(abs(f1), abs(f2)), _bounded_tags(f1 >= 0 and f2 >= 0),
                      f"step:{h},{hh},{k},{f1},{f2}")


def poly(*coeffs) -> QCFunction:
    """``c0 + c1 x + ...`` on the real line."""
    if not coeffs:
        raise BadParams("poly needs at least one coefficient")
    piece = Poly(tuple(Fraction(c) for c in coeffs))
    tags = {"exact"}
    bound = None
    if piece.degree == 0:
        bound = abs(piece.coeffs[0])
        tags.add("bounded")
        if piece.coeffs[0] >= 0:
            tags.add("nonnegative")
    return QCFunction(_real_line(), Piecewise.single(piece), lambda p: piece.exact(p), (), bound,
                      frozenset(tags), "poly:" + ",".join(str(c) for c in piece.coeffs))


def power(n) -> QCFunction:
    """``x**n`` on [0,1]."""
    n = _nonneg_int(n, "power")
    piece = P.RPow(Fraction(n))
    return QCFunction(UNIT, Piecewise.single(piece), lambda p: piece.exact(p), (), Fraction(1),
                      _bounded_tags(True, {"exact"}), f"power:{n}")


def rpow(p) -> QCFunction:
    """``x**p`` on (0,1] for rational ``p`` (unbounded when p < 0)."""
    p = Fraction(p)
    piece = P.RPow(p)
    bounded = p >= 0
    domain = Rectangle.of(Interval(0, 1, Topology.HALF_OPEN_LO))
    return QCFunction(domain, Piecewise.single(piece),
                      lambda q: piece.exact(q) if q[0] > 0 else Fraction(0),
                      (), Fraction(1) if bounded else None,
                      frozenset({"nonnegative"} | ({"bounded"} if bounded else set())), f"rpow:{p}")


def const(c) -> QCFunction:
    f = constant(c, _real_line())
    return f


def indicator(rects: Multirectangle) -> QCFunction:
    """Indicator of a finite union of rectangles (topology respected)."""
    comps = rects.components
    if not comps:
        return constant(0, _real_line())
    d = comps[0].dim
    if any(not r.bounded for r in comps):
        raise BadParams("indicator needs bounded rectangles")
    cuts = [sorted({x for r in comps for x in (r.sides[k].lo, r.sides[k].hi)}) for k in range(d)]
    pos = [{c: i for i, c in enumerate(cs)} for cs in cuts]
    # cell i on axis k is the open interval (cuts[i-1], cuts[i])
    grid = np.zeros(tuple(len(cs) + 1 for cs in cuts), dtype=bool)
    for r in comps:
        grid[tuple(slice(pos[k][r.sides[k].lo] + 1, pos[k][r.sides[k].hi] + 1) for k in range(d))] = True
    one, zero = Poly.const(1, d), Poly.const(0, d)
    pieces = {tuple(int(i) for i in key): (one if v else zero) for key, v in np.ndenumerate(grid)}
    jumps = []
    for k in range(d):
        change = np.diff(grid, axis=k)
        axes = tuple(a for a in range(d) if a != k)
        hit = change.any(axis=axes) if axes else change
        jumps.append(frozenset(cuts[k][i] for i in np.flatnonzero(hit)))
    pw = Piecewise(d, tuple(tuple(c) for c in cuts), pieces, tuple(jumps))
    name = "indicator:" + "u".join("x".join(str(s) for s in r.sides) for r in comps)

    def ev(p):
        return Fraction(1) if any(r.contains(tuple(p)) for r in comps) else Fraction(0)

    return QCFunction(_real_line(d), pw, ev, (), Fraction(1), _bounded_tags(True, {"characteristic"}), name)


def exp_abs_y() -> QCFunction:
    """``exp(-|y|)`` on the plane."""
    lower = P.Exp(Fraction(1), 1, 2)
    upper = P.Exp(Fraction(-1), 1, 2)
    pw = Piecewise(2, ((), (Fraction(0),)), {(0, 0): lower, (0, 1): upper}, (frozenset(), frozenset()))

    def ev(p):
        return math.exp(-abs(float(p[1]))) if p[1] != 0 else Fraction(1)

    return QCFunction(_real_line(2), pw, ev, (), Fraction(1), _bounded_tags(True), "exp-abs-y")


def alternating(n: int) -> QCFunction:
    """``1_[0,1/2]`` for even ``n`` and ``1_[1/2,1]`` for odd ``n``."""
    n = _nonneg_int(n, "alternating")
    half = Fraction(1, 2)
    if n % 2 == 0:
        pw = _line([half], [1, 0])
        ev = lambda p: Fraction(1) if 0 <= p[0] <= half else Fraction(0)
    else:
        pw = _line([half], [0, 1])
        ev = lambda p: Fraction(1) if half <= p[0] <= 1 else Fraction(0)
    return QCFunction(UNIT, pw, ev, (), Fraction(1), _bounded_tags(True, {"characteristic"}), f"alternating:{n}")


def cut_ramp(n: int) -> QCFunction:
    """``x * 1_[0, 1-1/n]`` on [0,1] (increasing in ``n``)."""
    n = _positive_int(n, "cut-ramp")
    c = 1 - Fraction(1, n)
    pw = _line([c], [Poly((0, 1)), 0]) if c < 1 else _line([], [Poly((0, 1))])
    return QCFunction(UNIT, pw, lambda p: p[0] if p[0] <= c else Fraction(0), (), Fraction(1),
                      _bounded_tags(True), f"cut-ramp:{n}")


def finite_indicator(points) -> QCFunction:
    """Indicator of finitely many rationals of [0,1] (zero a.e.)."""
    pts = tuple(sorted({Fraction(q) for q in points}))
    exc = FinitePoints(tuple((q, Fraction(1)) for q in pts))
    members = frozenset(pts)
    return QCFunction(UNIT, Piecewise.single(Poly.const(0)),
                      lambda p: Fraction(1) if _exact(p[0]) and Fraction(p[0]) in members else Fraction(0),
                      (exc,), Fraction(1), _bounded_tags(True, {"characteristic"}),
                      "points:" + ",".join(str(q) for q in pts))


def _positive_int(v, name) -> int:
    v = Fraction(v)
    if v.denominator != 1 or v < 1:
        raise BadParams(f"{name} needs a positive integer, got {v}")
    return int(v)


def _nonneg_int(v, name) -> int:
    v = Fraction(v)
    if v.denominator != 1 or v < 0:
        raise BadParams(f"{name} needs a nonnegative integer, got {v}")
    return int(v)


@dataclass(frozen=True)
class Entry:
    build: Callable
    arity: tuple  # allowed parameter counts (None = any)
    doc: str


CATALOG: dict[str, Entry] = {
    "dirichlet": Entry(dirichlet, (0,), "1 on rationals of [0,1]"),
    "thomae": Entry(thomae, (0,), "1/q at p/q, 0 at irrationals"),
    "qn-indicator": Entry(qn_indicator, (1,), "indicator of the first n enumerated rationals"),
    "cos-power": Entry(cos_power, (2,), "cos(m! pi x)^(2n)"),
    "spike": Entry(spike, (1,), "n on (1/n,2/n]"),
    "wide-spike": Entry(wide_spike, (1,), "1/n on (n,2n]"),
    "trapezoid": Entry(trapezoid, (1,), "travelling trapezoid on (0,inf)"),
    "step": Entry(step, (5,), "f1 on [h,hh), f2 on [hh,k]"),
    "poly": Entry(poly, None, "c0 + c1 x + ..."),
    "power": Entry(power, (1,), "x^n on [0,1]"),
    "rpow": Entry(rpow, (1,), "x^p on (0,1]"),
    "const": Entry(const, (1,), "constant on the real line"),
    "exp-abs-y": Entry(exp_abs_y, (0,), "exp(-|y|) on the plane"),
    "tail-indicator": Entry(tail_indicator, (1,), "indicator of [n,inf)"),
    "alternating": Entry(alternating, (1,), "1_[0,1/2] (n even) / 1_[1/2,1] (n odd)"),
    "cut-ramp": Entry(cut_ramp, (1,), "x 1_[0,1-1/n]"),
    "points": Entry(lambda *pts: finite_indicator(pts), None, "indicator of finitely many rationals"),
    "indicator": Entry(indicator, None, "indicator of a union of rectangles"),
}


def catalog(name: str, *params) -> QCFunction:
    """Build a catalog entry by name."""
    entry = CATALOG.get(name)
    if entry is None:
        raise UnknownName(f"unknown function {name!r}")
    if entry.arity is not None and len(params) not in entry.arity:
        raise BadParams(f"{name} takes {entry.arity[0]} parameter(s), got {len(params)}")
    try:
        return entry.build(*params)
    except (TypeError, ZeroDivisionError) as exc:
        raise BadParams(f"bad parameters for {name}: {exc}") from exc


# ---------------------------------------------------------------------------
# DSL


_NAME = re.compile(r"[a-z][a-z0-9\-]*")
_NUMBER = re.compile(r"[+-]?(?:inf|\d+(?:/\d+|\.\d*(?:e[+-]?\d+)?|e[+-]?\d+)?|\.\d+(?:e[+-]?\d+)?)")
_BINARY = {"sum": "sum", "prod": "product", "max": "max", "min": "min"}
_UNARY = {"neg", "abs"}
_TRUNC = {"tplus": "plus", "tminus": "minus"}


class DSLError(ValueError):
    pass


class _Parser:
    def __init__(self, text: str, index: int | None):
        self.s = re.sub(r"\s+", "", text)
        self.i = 0
        self.index = index
        self.uses_index = False

    def peek(self, k: int = 1) -> str:
        return self.s[self.i:self.i + k]

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise DSLError(f"expected {ch!r} at position {self.i} in {self.s!r}")
        self.i += 1

    def parse(self):
        node = self.expr()
        if self.i != len(self.s):
            raise DSLError(f"trailing input at position {self.i} in {self.s!r}")
        return node

    def name(self) -> str:
        m = _NAME.match(self.s, self.i)
        if not m:
            raise DSLError(f"expected a name at position {self.i} in {self.s!r}")
        self.i = m.end()
        return m.group()

    def number(self) -> Fraction | float:
        if self._index_here():
            self.i += 1
            self.uses_index = True
            if self.index is None:
                raise DSLError("the index n is only allowed in sequence templates")
            return Fraction(self.index)
        m = _NUMBER.match(self.s, self.i)
        if not m:
            raise DSLError(f"expected a number at position {self.i} in {self.s!r}")
        self.i = m.end()
        return parse_extended(m.group())

    def _index_here(self) -> bool:
        if self.peek() != "n":
            return False
        nxt = self.s[self.i + 1:self.i + 2]
        return nxt in ("", ",", ";", ")")

    def _is_number_ahead(self) -> bool:
        return bool(_NUMBER.match(self.s, self.i)) or self._index_here()

    def expr(self):
        start = self.i
        nm = self.name()
        if nm in _BINARY and self.peek() == "(":
            self.expect("(")
            args = [self.expr()]
            seps = []
            while self.peek() in (",", ";"):
                seps.append(self.peek())
                self.i += 1
                args.append(self.expr())
            self.expect(")")
            if len(args) < 2:
                raise DSLError(f"{nm} needs at least two arguments")
            if len(set(seps)) > 1:
                raise DSLError(f"mixed separators in {self.s[start:self.i]!r}")
            out = args[0]
            for a in args[1:]:
                if seps[0] == ";":
                    if nm != "prod":
                        raise DSLError("';' (tensor) separators are only allowed in prod")
                    out = tensor(out, a)
                else:
                    out = combine(_BINARY[nm], out, a)
            return out
        if nm in _UNARY and self.peek() == "(":
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return negate(arg) if nm == "neg" else abs_value(arg)
        if nm in _TRUNC and self.peek() == ":":
            self.expect(":")
            level = self.number()
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return truncate(arg, _TRUNC[nm], level)
        params: list = []
        if self.peek() == ":":
            self.i += 1
            if nm == "indicator":
                params = [self.set_literal()]
            else:
                params.append(self.number())
                while self.peek() == "," and self._number_follows():
                    self.i += 1
                    params.append(self.number())
        return catalog(nm, *params)

    def _number_follows(self) -> bool:
        save = self.i
        self.i += 1
        ok = self._is_number_ahead()
        if ok and not self._index_here():
            m = _NUMBER.match(self.s, self.i)
            end = m.end()
            # a name such as "inf-..." is not a number
            ok = end >= len(self.s) or self.s[end] in ",;)"
        self.i = save
        return ok

    def set_literal(self) -> Multirectangle:
        rects = [self.rect()]
        while self.peek() == "u":
            self.i += 1
            rects.append(self.rect())
        return Multirectangle(tuple(rects))

    def rect(self) -> Rectangle:
        sides = [self.interval()]
        while self.peek() == "x":
            self.i += 1
            sides.append(self.interval())
        return Rectangle(tuple(sides))

    def interval(self) -> Interval:
        open_ch = self.peek()
        if open_ch not in "([":
            raise DSLError(f"expected an interval at position {self.i} in {self.s!r}")
        self.i += 1
        a = self.number()
        self.expect(",")
        b = self.number()
        close_ch = self.peek()
        if close_ch not in ")]":
            raise DSLError(f"expected ')' or ']' at position {self.i} in {self.s!r}")
        self.i += 1
        topo = {("(", ")"): Topology.OPEN, ("[", "]"): Topology.CLOSED,
                ("(", "]"): Topology.HALF_OPEN_LO, ("[", ")"): Topology.HALF_OPEN_HI}[(open_ch, close_ch)]
        return Interval(a, b, topo)


def parse_function(text: str) -> QCFunction:
    """Parse a DSL expression into a descriptor."""
    return _Parser(text, None).parse()


def parse_set(text: str) -> Multirectangle:
    """Parse a set literal such as ``(0,1)u(2,3)`` or ``[0,1]x[0,1]``."""
    p = _Parser(text, None)
    out = p.set_literal()
    if p.i != len(p.s):
        raise DSLError(f"trailing input in set literal {text!r}")
    return out


# known pointwise limits of single-entry templates
_LIMITS: dict[str, Callable[[list], QCFunction]] = {
    "power": lambda params: finite_indicator([1]),
    "spike": lambda params: constant(0, UNIT),
    "wide-spike": lambda params: constant(0, HALF_LINE),
    "trapezoid": lambda params: constant(0, Rectangle.of(Interval(0, INF, Topology.OPEN))),
    "tail-indicator": lambda params: constant(0, HALF_LINE),
    "qn-indicator": lambda params: dirichlet(),
    "cut-ramp": lambda params: QCFunction(UNIT, _line([1], [Poly((0, 1)), 0]),
                                          lambda p: p[0] if p[0] < 1 else Fraction(0), (), Fraction(1),
                                          _bounded_tags(True), "cut-ramp-limit"),
}


def _cos_limit(params) -> QCFunction:
    m = int(params[0])
    F = math.factorial(m)
    return finite_indicator([Fraction(k, F) for k in range(F + 1)])


_LIMITS["cos-power"] = _cos_limit


def parse_sequence(text: str, start: int | None = None) -> QCSequence:
    """Parse a template in the index ``n`` into a sequence.

    Without ``n`` the template is a constant sequence.
    """
    probe = _Parser(text, 2)
    first = probe.parse()
    if not probe.uses_index:
        f = first
        return QCSequence(lambda n: f, f.domain, 1, text, f)
    if start is None:
        start = 1
        for s in (1, 2, 3):
            try:
                parse_function_at(text, s)
                start = s
                break
            except (BadParams, ValueError):
                continue
    limit = None
    m = re.fullmatch(r"([a-z][a-z0-9\-]*):(.*)", re.sub(r"\s+", "", text))
    if m and m.group(1) in _LIMITS:
        params = [p for p in m.group(2).split(",")]
        if params[-1] == "n" or "n" in params:
            fixed = [Fraction(p) for p in params if p != "n"]
            limit = _LIMITS[m.group(1)](fixed)
    domain = parse_function_at(text, start).domain
    return QCSequence(lambda n: parse_function_at(text, n), domain, start, text, limit)


def parse_function_at(text: str, n: int) -> QCFunction:
    return _Parser(text, n).parse()
