from fractions import Fraction as F
from functools import lru_cache

import pytest
from hypothesis import given, strategies as st

from qcint.cantor import (CantorKind, Membership, OutOfDomain, build_stage, cover_countable, membership,
                          membership_detail, removed_measure)
from qcint.rational import rational_enumeration
from qcint.sets import length


@lru_cache(maxsize=None)
def stage(kind, j):
    return build_stage(kind, j)


def test_first_stages():
    t = build_stage("ternary", 1)
    assert [str(r) for r in t.removed] == ["(1/3,2/3)"]
    assert t.measure_retained == F(2, 3)
    s = build_stage("smith-volterra", 1)
    assert [str(r) for r in s.removed] == ["(3/8,5/8)"]
    assert s.measure_retained == F(3, 4)


@pytest.mark.parametrize("kind", ["ternary", "svc"])
@pytest.mark.parametrize("j", range(1, 11))
def test_stage_invariants(kind, j):
    st_ = stage(kind, j)
    assert len(st_.retained) == 2 ** j
    assert st_.removed.is_open and st_.removed.is_disjoint
    assert st_.retained.is_closed and st_.retained.is_disjoint
    assert st_.measure_removed + st_.measure_retained == 1
    assert st_.measure_removed == removed_measure(kind, j)
    base = 3 if kind == "ternary" else 4
    if j > 1:
        prev = stage(kind, j - 1)
        assert prev.measure_removed + F(2 ** (j - 1), base ** j) == st_.measure_removed
        # every retained component sits in a component of the previous stage
        for r in st_.retained:
            assert any(p.sides[0].lo <= r.sides[0].lo and r.sides[0].hi <= p.sides[0].hi for p in prev.retained)


def test_closed_forms():
    for J in range(1, 21):
        assert removed_measure("svc", J) == F(1, 2) * (1 - F(1, 2 ** J))
        assert removed_measure("ternary", J) == 1 - F(2, 3) ** J
        assert F(1, 2) - removed_measure("svc", J) == F(1, 2 ** (J + 1))


def test_svc_components_keep_splitting():
    # no retained component survives intact: each one loses its middle next stage
    for j in range(1, 8):
        nxt = stage("svc", j + 1)
        for r in stage("svc", j).retained:
            mid = (r.sides[0].lo + r.sides[0].hi) / 2
            assert nxt.removed.contains((mid,))


def test_membership_examples():
    assert membership("ternary", F(1, 3)) is Membership.IN_LIMIT_SET
    assert membership("ternary", F(1, 2)) is Membership.IN_COMPLEMENT
    assert membership("svc", F(1, 2)) is Membership.IN_COMPLEMENT
    assert membership("ternary", F(1, 4)) is Membership.IN_LIMIT_SET
    with pytest.raises(OutOfDomain):
        membership("ternary", F(3, 2))


@given(st.integers(1, 9).flatmap(lambda q: st.tuples(st.integers(0, q), st.just(q))))
def test_ternary_membership_matches_stages(pq):
    x = F(*pq)
    J = x.denominator + 2
    removed = stage("ternary", J).removed.contains((x,))
    in_limit = membership("ternary", x) is Membership.IN_LIMIT_SET
    assert in_limit == (not removed)


@given(st.integers(0, 2 ** 10))
def test_svc_membership_matches_stages(k):
    x = F(k, 2 ** 10)
    d = membership_detail("svc", x)
    removed = stage("svc", 10).removed.contains((x,))
    if removed:
        assert d.verdict is Membership.IN_COMPLEMENT
    if d.verdict is Membership.IN_COMPLEMENT:
        assert stage("svc", max(d.stage, 1)).removed.contains((x,))


def test_cover_examples():
    c = cover_countable([F(1, 2)], F(1, 10))
    assert [str(r) for r in c] == ["(39/80,41/80)"] and length(c) == F(1, 40)
    assert len(cover_countable([], F(1, 10))) == 0
    pts = [rational_enumeration(n) for n in range(1, 5)]
    c = cover_countable(pts, F(1, 10))
    assert length(c) == 15 * F(1, 10) / 32
    assert all(c.contains((p,)) for p in pts)


@given(st.lists(st.builds(F, st.integers(-50, 50), st.integers(1, 20)), max_size=30), st.integers(1, 12))
def test_cover_budget(points, k):
    eps = F(1, 2 ** k)
    c = cover_countable(points, eps)
    assert length(c) < eps
    assert all(c.contains((p,)) for p in points)


def test_kind_parse():
    assert CantorKind.parse("svc") is CantorKind.SMITH_VOLTERRA
    with pytest.raises(ValueError):
        CantorKind.parse("koch")
