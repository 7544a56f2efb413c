"""Ternary Cantor and Smith-Volterra-Cantor sets, stage by stage.

Stage ``j`` removes the open middle interval of every retained closed
interval: of length ``3**-j`` for the ternary set and ``4**-j`` for the
Smith-Volterra-Cantor (SVC) set.  All endpoints are exact rationals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .sets import Interval, Multirectangle, Topology, length


class OutOfDomain(ValueError):
    pass


class CantorKind(enum.Enum):
    TERNARY = "ternary"
    SMITH_VOLTERRA = "smith-volterra"

    @classmethod
    def parse(cls, text: "str | CantorKind") -> "CantorKind":
        if isinstance(text, CantorKind):
            return text
        t = text.strip().lower()
        if t in ("svc", "smith-volterra", "smith_volterra", "fat"):
            return cls.SMITH_VOLTERRA
        if t in ("ternary", "cantor"):
            return cls.TERNARY
        raise ValueError(f"unknown Cantor kind {text!r}")

    def removed_length(self, j: int) -> Fraction:
        """Length of each middle interval removed at stage ``j``."""
        base = 3 if self is CantorKind.TERNARY else 4
        return Fraction(1, base**j)


class Membership(enum.Enum):
    IN_COMPLEMENT = "in-complement-open-set"
    IN_LIMIT_SET = "in-limit-set"


@dataclass(frozen=True)
class CantorStage:
    kind: CantorKind
    j: int
    removed: Multirectangle   # open, disjoint: C_1 ∪ ... ∪ C_j
    retained: Multirectangle  # closed, disjoint: D_j

    @property
    def measure_removed(self) -> Fraction:
        return length(self.removed)

    @property
    def measure_retained(self) -> Fraction:
        return length(self.retained)


def _split(iv: Interval, gap: Fraction) -> tuple[Interval, Interval, Interval]:
    mid = (iv.lo + iv.hi) / 2
    a, b = mid - gap / 2, mid + gap / 2
    return Interval(iv.lo, a), Interval.open(a, b), Interval(b, iv.hi)


def build_stage(kind: "CantorKind | str", j: int) -> CantorStage:
    kind = CantorKind.parse(kind)
    if j < 1:
        raise ValueError("stage index must be >= 1")
    retained = [Interval(0, 1)]
    removed: list[Interval] = []
    for step in range(1, j + 1):
        gap = kind.removed_length(step)
        nxt = []
        for iv in retained:
            left, mid, right = _split(iv, gap)
            nxt += [left, right]
            removed.append(mid)
        retained = nxt
    removed.sort(key=lambda iv: iv.lo)
    return CantorStage(kind, j, Multirectangle.intervals(*removed), Multirectangle.intervals(*retained))


def removed_measure(kind: "CantorKind | str", j: int) -> Fraction:
    """Closed form ``sum_{i<=j} 2**(i-1) * gap_i``."""
    kind = CantorKind.parse(kind)
    if kind is CantorKind.TERNARY:
        return 1 - Fraction(2, 3) ** j
    return Fraction(1, 2) * (1 - Fraction(1, 2**j))


# ---------------------------------------------------------------------------
# membership


def _ternary_member(x: Fraction) -> tuple[Membership, int]:
    # Base-3 digits chosen from {0, 2} whenever an expansion allows it:
    # x <= 1/3 gives digit 0 (1/3 = 0.0222...), x >= 2/3 gives digit 2
    # (2/3 = 0.2000...).  Rational orbits are eventually periodic.
    seen = set()
    n = 0
    while x not in seen:
        seen.add(x)
        n += 1
        if x <= Fraction(1, 3):
            x = 3 * x
        elif x >= Fraction(2, 3):
            x = 3 * x - 2
        else:
            return Membership.IN_COMPLEMENT, n
    return Membership.IN_LIMIT_SET, n


def _svc_member(x: Fraction, max_stage: int) -> tuple[Membership, int, bool]:
    lo, hi = Fraction(0), Fraction(1)
    for step in range(1, max_stage + 1):
        if x == lo or x == hi:
            # endpoints of retained intervals are never removed
            return Membership.IN_LIMIT_SET, step - 1, True
        half_gap = CantorKind.SMITH_VOLTERRA.removed_length(step) / 2
        mid = (lo + hi) / 2
        if mid - half_gap < x < mid + half_gap:
            return Membership.IN_COMPLEMENT, step, True
        if x <= mid - half_gap:
            hi = mid - half_gap
        else:
            lo = mid + half_gap
    return Membership.IN_LIMIT_SET, max_stage, False


@dataclass(frozen=True)
class MembershipDetail:
    verdict: Membership
    stage: int        # stage at which the verdict was reached
    certified: bool   # False: no decision within the stage budget


def membership_detail(kind: "CantorKind | str", x, max_stage: int = 256) -> MembershipDetail:
    kind = CantorKind.parse(kind)
    if isinstance(x, float):
        raise TypeError("membership needs an exact rational")
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise OutOfDomain(f"{x} is outside [0,1]")
    if kind is CantorKind.TERNARY:
        verdict, n = _ternary_member(x)
        return MembershipDetail(verdict, n, True)
    return MembershipDetail(*_svc_member(x, max_stage))


def membership(kind: "CantorKind | str", x, max_stage: int = 256) -> Membership:
    """Decide whether a rational in [0,1] lies in the limit set.

    Exact for the ternary set.  For the SVC set points are followed through
    the construction; a point that is neither removed nor an endpoint within
    ``max_stage`` stages is reported in the limit set (see
    :func:`membership_detail` for the certification flag).
    """
    return membership_detail(kind, x, max_stage).verdict


# ---------------------------------------------------------------------------
# null-set covers


def cover_countable(points: Sequence, eps) -> Multirectangle:
    """Open intervals around finitely many points with total length < eps.

    Interval ``n`` (1-indexed) is centred at the ``n``-th point and has
    length ``eps / 2**(n+1)``.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    out = []
    for n, q in enumerate(points, start=1):
        q = Fraction(q)
        half = eps / 2 ** (n + 2)
        out.append(Interval(q - half, q + half, Topology.OPEN))
    return Multirectangle.intervals(*out)
