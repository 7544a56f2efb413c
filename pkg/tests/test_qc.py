import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcint.catalog import (BadParams, DSLError, UnknownName, catalog, indicator, parse_function, parse_sequence,
                           parse_set)
from qcint.cantor import build_stage
from qcint.qc import (DomainMismatch, NotCharacteristic, QCFunction, combine, constant, restrict_to_set, truncate)
from qcint.rational import rational_enumeration
from qcint.sets import Interval, Rectangle

ONE_D = ["dirichlet", "thomae", "qn-indicator:5", "cos-power:3,2", "spike:4", "wide-spike:3", "trapezoid:2",
         "step:0,1/2,1,2,5", "poly:1,-2,1", "power:3", "rpow:1/2", "const:2", "tail-indicator:2", "alternating:3",
         "cut-ramp:4", "points:1/3,1/2", "indicator:(0,1)u(2,3)", "sum(dirichlet,poly:0,1)",
         "max(step:0,1/2,1,2,5,power:2)", "tplus:1/2(power:1)", "abs(poly:-1/2,1)"]
TWO_D = ["exp-abs-y", "prod(poly:0,1;poly:0,1)", "indicator:[0,1/2]x[0,1/2]", "prod(step:0,1/2,1,2,5;cos-power:2,1)"]


def box_for(f: QCFunction) -> Rectangle:
    sides = []
    for s in f.domain.sides:
        lo = s.lo if not isinstance(s.lo, float) else F(-8)
        hi = s.hi if not isinstance(s.hi, float) else F(8)
        sides.append(Interval(lo, hi))
    return Rectangle(tuple(sides))


# catalog examples -------------------------------------------------------------

def test_catalog_examples():
    d = catalog("dirichlet")
    assert d(F(2, 3)) == 1 and d(math.sqrt(2) / 2) == 0
    assert catalog("thomae")(F(3, 4)) == F(1, 4)
    s = parse_function("spike:4")
    assert s(F(3, 8)) == 4 and s(F(1, 4)) == 0 and s(F(1, 2)) == 4
    assert parse_function("step:0,1/2,1,2,5")(F(1, 4)) == 2
    assert parse_function("cos-power:2,1")(F(1, 2)) == 1


def test_unknown_and_bad_params():
    with pytest.raises(UnknownName):
        parse_function("nosuch")
    with pytest.raises(BadParams):
        parse_function("spike:1,2")
    with pytest.raises(DSLError):
        parse_function("sum(power:2")
    with pytest.raises(DSLError):
        parse_function("max(power:1;power:2)")


def test_qn_indicator_support():
    for n in (1, 3, 7, 20):
        f = parse_function(f"qn-indicator:{n}")
        pts = rational_enumeration.prefix(n)
        assert all(f(p) == 1 for p in pts)
        grid = {F(p, q) for q in range(1, 13) for p in range(q + 1)}
        assert sum(1 for x in grid if f(x) == 1) == len([p for p in pts if p in grid])
        assert sum(1 for x in grid | set(pts) if f(x) != 0) == n


def test_cos_power_limit():
    seq = parse_sequence("cos-power:2,n")
    xs = [F(k, 12) for k in range(13)]
    big = seq(400)
    for x in xs:
        v = float(big(x))
        if (2 * x).denominator == 1:
            assert v == 1
        else:
            assert v < 1e-3
    assert seq.limit is not None
    assert seq.limit(F(1, 2)) == 1 and seq.limit(F(1, 3)) == 0


# witnesses ---------------------------------------------------------------------

@pytest.mark.parametrize("text", ONE_D + TWO_D)
def test_witness_length_strictly_below_eps(text):
    f = parse_function(text)
    box = box_for(f)
    for k in range(0, 21, 4):
        eps = F(1, 2 ** k)
        assert f.witness(eps, box).length < eps


@pytest.mark.parametrize("text", ONE_D)
def test_associated_function_agrees_off_witness(text):
    f = parse_function(text)
    box = box_for(f)
    rng = np.random.default_rng(7)
    M = f.bound
    for eps in (F(1, 4), F(1, 64)):
        w, g = f.associated(eps, box)
        cover = w.multirectangle
        lo, hi = box.sides[0].lo, box.sides[0].hi
        pts = [lo + (hi - lo) * F(int(k), 4096) for k in rng.integers(0, 4097, 60)]
        pts += [float(lo) + float(hi - lo) * float(u) for u in rng.random(60)]
        for x in pts:
            if isinstance(x, F) and cover.contains((x,)):
                continue
            if not isinstance(x, F) and any(abs(x - float(c)) < float(d) for _, c, d in w.slabs):
                continue
            expect = f(x)
            got = g.exact((F(x),)) if isinstance(x, F) else g.values(np.array([[x]]))[0]
            assert float(got) == pytest.approx(float(expect), abs=1e-9), (x, expect, got)
        if M is not None:
            xs = np.linspace(float(lo), float(hi), 2001)[:, None]
            assert np.all(np.abs(g.values(xs)) <= float(M) + 1e-12)


@pytest.mark.parametrize("text", ["step:0,1/2,1,2,5", "indicator:(0,1)u(2,3)", "spike:3", "alternating:2"])
def test_associated_function_is_continuous(text):
    f = parse_function(text)
    box = box_for(f)
    w, g = f.associated(F(1, 16), box)
    for axis_cut in f.regular.cuts[0]:
        c = float(axis_cut)
        left, right = g.values(np.array([[c - 1e-12], [c + 1e-12]]))
        assert abs(left - right) < 1e-6


def test_shared_witness_of_sequence():
    seq = parse_sequence("spike:n")
    w = seq.shared_witness(F(1, 8), 12)
    assert w.length < F(1, 8)


# algebra -----------------------------------------------------------------------

def test_combine_examples():
    d = catalog("dirichlet")
    z = combine("sum", d, parse_function("neg(dirichlet)"))
    assert all(z(x) == 0 for x in (F(1, 3), F(1, 2), 0.3))
    m = combine("max", parse_function("const:1"), parse_function("const:2"))
    assert m(F(5)) == 2 and m.witness(F(1, 8)).empty
    p = combine("product", d, constant(3, d.domain))
    assert p(F(1, 2)) == 3 and p(0.7071067811865476) == 0


def test_combine_domain_mismatch():
    with pytest.raises(DomainMismatch):
        combine("sum", parse_function("indicator:[0,1]"), parse_function("exp-abs-y"))


def test_combined_witness_within_budget():
    f = parse_function("sum(step:0,1/2,1,2,5,sum(dirichlet,spike:3))")
    for k in range(1, 12):
        assert f.witness(F(1, 2 ** k)).length < F(1, 2 ** k)


@given(st.sampled_from(["sum", "max", "min"]), st.lists(st.sampled_from(ONE_D[:12]), min_size=3, max_size=3),
       st.builds(F, st.integers(0, 64), st.just(64)))
def test_combine_commutative_associative(op, names, x):
    a, b, c = (parse_function(n) for n in names)
    try:
        left = combine(op, combine(op, a, b), c)
        right = combine(op, a, combine(op, c, b))
    except DomainMismatch:
        return
    if not left.domain.sides[0].contains(x):
        return
    assert left(x) == right(x)


def test_truncate_examples():
    ident = parse_function("poly:0,1").restricted(Rectangle.parse("[0,2]"))
    assert truncate(ident, "plus", 1)(F(0)) == 1
    d = catalog("dirichlet")
    t = truncate(d, "minus", 0)
    assert all(t(x) == 0 for x in (F(1, 3), 0.4, F(0)))
    assert truncate(d, "plus", float("-inf")) is d
    assert truncate(d, "minus", F(1, 2)).witness(F(1, 8)).length < F(1, 8)


def test_restrict_to_set_examples():
    one = parse_function("const:1")
    r = restrict_to_set(one, indicator(parse_set("(0,1)")))
    assert r(F(1, 2)) == 1 and r(F(1)) == 0 and r(F(3, 2)) == 0
    D2 = build_stage("svc", 2).retained
    ident = parse_function("poly:0,1")
    r = restrict_to_set(ident, indicator(D2))
    assert r(F(1, 2)) == 0 and r(F(1, 16)) == F(1, 16)
    r = restrict_to_set(catalog("dirichlet"), indicator(parse_set("[0,1]")))
    assert r(F(1, 3)) == 1
    with pytest.raises(NotCharacteristic):
        restrict_to_set(one, parse_function("power:2"))


def test_tensor_products():
    f = parse_function("prod(poly:0,1;power:2)")
    assert f.dim == 2 and f(F(1, 2), F(1, 3)) == F(1, 18)


def test_sequences_parse():
    seq = parse_sequence("power:n")
    assert seq(3)(F(1, 2)) == F(1, 8)
    assert seq.limit(F(1)) == 1 and seq.limit(F(1, 2)) == 0
    assert parse_sequence("spike:n").start >= 1
