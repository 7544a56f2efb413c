import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from qcint.catalog import parse_function, parse_set
from qcint.fubini import (NOT_SUMMABLE, PASS, NotSummable, fubini_check,
                          iterated_integrate, section_function, section_identity_check, tonelli_gate)
from qcint.lebesgue import PLUS_INF, integrate
from qcint.sets import Interval, Multirectangle, Rectangle, union_measure

from oracles import inclusion_exclusion_volume
from strategies import multirectangles

XY = "prod(poly:0,1;poly:0,1)"
SQUARE = Rectangle.parse("[0,1]x[0,1]")


def test_xy_both_orders():
    f = parse_function(XY)
    for order in [(1, 0), (0, 1)]:
        r = iterated_integrate(f, order, SQUARE)
        assert r.value == F(1, 4) and r.error_bound == 0


def test_constant_area_any_order():
    f = parse_function("prod(const:3;const:1)")
    R = Rectangle.parse("[0,2]x[1,5/2]")
    assert {iterated_integrate(f, o, R).value for o in [(1, 0), (0, 1)]} == {F(9)}


def test_order_validation():
    with pytest.raises(ValueError):
        iterated_integrate(parse_function(XY), (0, 0), SQUARE)


def test_exp_abs_y_inner_section():
    f = parse_function("exp-abs-y")
    for x in [F(0), F(5, 2), F(-7)]:
        g = section_function(f, 0, x)
        r = integrate(g, Rectangle.parse("[-3,3]"))
        assert abs(float(r.value) - 2 * (1 - math.exp(-3))) <= float(r.error_bound) + 1e-9


def test_fubini_xy():
    rep = fubini_check(parse_function(XY), SQUARE)
    assert rep.verdict == PASS
    assert rep.direct.value == F(1, 4)
    assert all(r.value == F(1, 4) for r in rep.iterated.values())
    assert all(g == 0 for g in rep.gaps.values())
    d = rep.as_dict()
    assert d["direct"]["value"] == "1/4" and set(d["iterated"]) == {"10", "01"}


def test_fubini_indicator():
    rep = fubini_check(parse_function("indicator:[0,1/2]x[0,1/2]"), SQUARE)
    assert rep.verdict == PASS and rep.direct.value == F(1, 4)
    assert all(r.value == F(1, 4) for r in rep.iterated.values())


def test_fubini_exp_abs_y_not_summable():
    with pytest.raises(NotSummable) as e:
        fubini_check(parse_function("exp-abs-y"))
    rep = e.value.report
    assert rep.verdict == NOT_SUMMABLE and not rep.summability.summable
    # dy first then dx: the outer integrand is 2 everywhere, so the outer integral diverges
    assert rep.iterated[(1, 0)].verdict == PLUS_INF
    assert rep.as_dict()["verdict"] == NOT_SUMMABLE


def test_fubini_3d_product():
    f = parse_function("prod(poly:1,1;poly:0,2;cos-power:1,1)")
    rep = fubini_check(f, Rectangle.parse("[0,1]x[0,1]x[0,1]"))
    assert rep.verdict == PASS
    expected = 1.5 * 1.0 * 0.5
    assert abs(float(rep.direct.value) - expected) <= float(rep.direct.error_bound) + 1e-6


@pytest.mark.parametrize("u,v,iu,iv", [("poly:1,2", "power:3", F(2), F(1, 4)),
                                       ("step:0,1/2,1,2,5", "poly:0,0,3", F(7, 2), F(1)),
                                       ("cos-power:2,1", "poly:1,-1", 0.5, 0.5)])
def test_separable(u, v, iu, iv):
    f = parse_function(f"prod({u};{v})")
    R = Rectangle.parse("[0,1]x[0,1]")
    rep = fubini_check(f, R)
    assert rep.verdict == PASS
    assert abs(float(rep.direct.value) - float(iu) * float(iv)) <= float(rep.direct.error_bound) + 1e-9


def test_gate():
    assert tonelli_gate(parse_function(XY), SQUARE).summable
    assert tonelli_gate(parse_function("indicator:[0,2]x[1,3]")).summable
    assert not tonelli_gate(parse_function("exp-abs-y")).summable


def test_power_product_passes():
    assert fubini_check(parse_function("prod(power:2;power:2)"), SQUARE).verdict == PASS


# section identity --------------------------------------------------------------------

def test_section_unit_square():
    rep = section_identity_check(parse_set("[0,1]x[0,1]"))
    assert rep.passed and rep.volume == rep.integral == 1


def test_section_stacked_squares():
    rep = section_identity_check(parse_set("[0,1]x[0,1]u[0,1]x[2,3]"), axis=1)
    assert rep.passed and rep.volume == 2
    assert [(a, b, m) for a, b, m in rep.profile if m] == [(0, 1, 1), (2, 3, 1)]
    assert rep.faces == (0, 1, 2, 3)


def test_section_staircase():
    A = parse_set("[0,1/2]x[0,1/2]u[1/2,1]x[0,1/2]u[0,1/2]x[1/2,1]u[0,1/4]x[1,5/4]")
    rep = section_identity_check(A)
    assert rep.passed and rep.volume == F(3, 4) + F(1, 16)


def test_null_sections():
    sizes = []
    for k in range(2, 10):
        w = F(1, 2 ** k)
        A = Multirectangle.of(Rectangle.of(Interval.open(F(1, 2) - w, F(1, 2) + w), Interval.open(F(0), F(1))))
        rep = section_identity_check(A, axis=1)
        assert rep.passed and rep.integral == 2 * w
        sizes.append(max(m for _, _, m in rep.profile))
    assert sizes == sorted(sizes, reverse=True) and sizes[-1] == F(1, 256)


@settings(max_examples=20)
@given(multirectangles(2, min_size=1, max_size=5), st.integers(0, 1))
def test_section_identity_2d(A, axis):
    rep = section_identity_check(A, axis)
    assert rep.passed and isinstance(rep.integral, F)
    boxes = [tuple((s.lo, s.hi) for s in r.sides) for r in A.components]
    assert rep.volume == inclusion_exclusion_volume(boxes)


@settings(max_examples=20)
@given(multirectangles(3, min_size=1, max_size=4), st.integers(0, 2))
def test_section_identity_3d(A, axis):
    rep = section_identity_check(A, axis)
    assert rep.passed and rep.volume == union_measure(A)


def test_section_identity_rejects_bad_input():
    with pytest.raises(ValueError):
        section_identity_check(parse_set("[0,1]"))
    with pytest.raises(ValueError):
        section_identity_check(parse_set("[0,inf)x[0,1]"))
