"""Exact rational parsing and formatting.

Rationals are plain :class:`fractions.Fraction` values.  This module only
adds the ``"p/q"`` literal format used on the command line and in JSON
reports.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Number = Union[Fraction, int, float]

INF = math.inf


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"``, an integer or a finite decimal literal exactly.

    >>> parse_rational("-1/8")
    Fraction(-1, 8)
    >>> parse_rational("1e-3")
    Fraction(1, 1000)
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if not s:
        raise ValueError("empty rational literal")
    try:
        # Fraction accepts "p/q", integers and decimal/scientific literals
        # and keeps decimals exact.
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational literal {text!r}") from exc


def parse_extended(text: str) -> Fraction | float:
    """Like :func:`parse_rational` but also accepts ``inf``/``-inf``."""
    s = text.strip().lower()
    if s in ("inf", "+inf", "oo", "+oo", "infinity"):
        return INF
    if s in ("-inf", "-oo", "-infinity"):
        return -INF
    return parse_rational(s)


def format_rational(value: Fraction | int | float) -> str:
    """Format as ``"p/q"`` (always with an explicit denominator).

    Infinite floats are rendered as ``"inf"``/``"-inf"``; other floats are
    rendered with ``repr`` since they are not exact.
    """
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    q = Fraction(value)
    return f"{q.numerator}/{q.denominator}"


def is_infinite(value: Number) -> bool:
    return isinstance(value, float) and math.isinf(value)


def to_float(value: Number) -> float:
    return float(value)


# ---------------------------------------------------------------------------
# a fixed enumeration of Q ∩ [0,1]: 0, 1, then p/q in lowest terms ordered
# by denominator and numerator (1/2, 1/3, 2/3, 1/4, 3/4, 1/5, ...)


def _totients(limit: int) -> list[int]:
    phi = list(range(limit + 1))
    for p in range(2, limit + 1):
        if phi[p] == p:
            for k in range(p, limit + 1, p):
                phi[k] -= phi[k] // p
    return phi


class _RationalEnumeration:
    def __init__(self) -> None:
        self._limit = 1
        self._phi = [0, 1]
        # _start[q] = index of the first rational with denominator q
        self._start = [0, 1, 3]

    def _grow(self, q: int) -> None:
        if q <= self._limit:
            return
        limit = max(q, 2 * self._limit)
        self._phi = _totients(limit)
        start = [0, 1, 3]
        for d in range(2, limit + 1):
            start.append(start[-1] + self._phi[d])
        self._start = start
        self._limit = limit

    def __call__(self, n: int) -> Fraction:
        if n < 1:
            raise ValueError("enumeration is 1-indexed")
        if n == 1:
            return Fraction(0)
        if n == 2:
            return Fraction(1)
        q = 2
        while True:
            self._grow(q + 1)
            if n < self._start[q + 1]:
                break
            q += 1
        offset = n - self._start[q]
        for p in range(1, q):
            if math.gcd(p, q) == 1:
                if offset == 0:
                    return Fraction(p, q)
                offset -= 1
        raise AssertionError("enumeration offset out of range")

    def prefix(self, n: int) -> list[Fraction]:
        """The first ``n`` terms (cached)."""
        cache = self.__dict__.setdefault("_prefix", [Fraction(0), Fraction(1)])
        q = cache[-1].denominator
        while len(cache) < n:
            q += 1
            cache.extend(Fraction(p, q) for p in range(1, q) if math.gcd(p, q) == 1)
        return cache[:n]

    def index_of(self, x) -> int | None:
        if isinstance(x, float) or not 0 <= x <= 1:
            return None
        x = Fraction(x)
        if x == 0:
            return 1
        if x == 1:
            return 2
        p, q = x.numerator, x.denominator
        self._grow(q)
        return self._start[q] + sum(1 for k in range(1, p) if math.gcd(k, q) == 1)


rational_enumeration = _RationalEnumeration()


def is_exact(x) -> bool:
    """Exact inputs are rationals; floats stand for sampled (irrational) reals."""
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)
