import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcint.catalog import parse_function
from qcint.qc import combine
from qcint.rational import rational_enumeration
from qcint.sets import Interval, Multirectangle, Rectangle
from qcint.tietze import (Circle, ClosedComplementDomain, EmptyK, PointCloud, RectUnion, SamplerTooCoarse, Tonelli,
                          UnboundedK, circle_hat, circle_sequence_at_origin, extend_1d, extend_nd, rho)

UNIT = Rectangle((Interval(F(0), F(1)),))
SQUARE = Rectangle((Interval(F(0), F(1)), Interval(F(0), F(1))))


def box1(a, b):
    return Rectangle((Interval(F(a), F(b)),))


def domain(*gaps, box=UNIT):
    return ClosedComplementDomain(box, Multirectangle(tuple(box1(a, b) for a, b in gaps)))


# random 1D domains: [0,1] minus a few open gaps
@st.composite
def domains(draw):
    cuts = draw(st.lists(st.integers(1, 63), min_size=0, max_size=8, unique=True))
    cuts = sorted(cuts)
    gaps = [(F(a, 64), F(b, 64)) for a, b in zip(cuts[::2], cuts[1::2]) if a < b]
    return domain(*gaps)


points01 = st.builds(F, st.integers(0, 128), st.just(128))

# increasing on [0,1]: extreme values sit at min K and max K
MONOTONE = ["power:1", "power:2", "power:5", "step:0,1/2,1,2,5", "step:0,1/3,1,-1,4", "poly:1,2,3",
            "tplus:1/2(power:1)", "sum(power:3,step:0,1/4,1,0,1)"]
monotone_fns = st.sampled_from(MONOTONE).map(parse_function)


# 1D examples ---------------------------------------------------------------------

def test_step_interpolation():
    K = domain((F(3, 8), F(5, 8)))
    f = lambda p: F(2) if p[0] <= F(1, 2) else F(5)
    assert extend_1d(f, K, F(1, 2)) == F(7, 2)
    assert extend_1d(f, K, F(3, 8)) == 2 and extend_1d(f, K, F(5, 8)) == 5
    assert extend_1d(f, K, F(7, 16)) == F(11, 4)


def test_constant_extension():
    K = domain((F(1, 8), F(1, 4)), (F(1, 2), F(7, 8)))
    c = parse_function("const:3")
    assert {extend_1d(c, K, F(k, 32)) for k in range(33)} == {3}


def test_dirichlet_on_rational_free_part():
    # remove neighbourhoods of the first rationals; the extension sees only the regular part
    gaps = []
    for k in range(24):
        q = rational_enumeration(k + 1)
        gaps.append((q - F(1, 2 ** (k + 8)), q + F(1, 2 ** (k + 8))))
    K = domain(*gaps, box=Rectangle((Interval(F(0), F(1)),)))
    d = parse_function("dirichlet")
    assert all(extend_1d(d, K, F(k, 97)) == 0 for k in range(98))


def test_constant_beyond_extremes():
    K = domain((F(0), F(1, 4)), (F(3, 4), F(1)))
    # K = [1/4, 3/4] plus the endpoints 0 and 1 of the closed box
    f = parse_function("power:1")
    assert extend_1d(f, K, F(1, 8)) == F(1, 8)
    assert K.extremes() == (F(0), F(1))


def test_empty_domain():
    K = ClosedComplementDomain(box1(F(1, 4), F(3, 4)), Multirectangle((box1(0, 1),)))
    with pytest.raises(EmptyK):
        extend_1d(parse_function("power:1"), K, F(1, 2))


def test_unbounded_rejected():
    with pytest.raises(UnboundedK):
        ClosedComplementDomain(Rectangle((Interval(F(0), math.inf),)))


def test_rho_examples():
    assert rho(RectUnion((box1(1, 2),)), (0,)) == 1
    assert rho(RectUnion((SQUARE,)), (2, 0)) == 1
    assert rho(RectUnion((SQUARE,)), (F(1, 2), F(1, 3))) == 0
    assert rho(RectUnion((SQUARE,)), (4, 5)) == 5
    assert rho(domain((F(1, 4), F(3, 4))), (F(1, 2),)) == F(1, 4)
    assert rho(PointCloud(((0, 0), (3, 4))), (0, 4)) == 3


# 1D properties -------------------------------------------------------------------

@settings(max_examples=500)
@given(domains(), monotone_fns, points01)
def test_bound_preservation(K, f, x):
    a, b = K.extremes()
    lo, hi = f(a), f(b)
    v = extend_1d(f, K, x)
    assert isinstance(v, F)
    assert lo <= v <= hi


@settings(max_examples=500)
@given(domains(), monotone_fns, st.sampled_from(["const:0", "poly:1/2,-1", "cos-power:1,1"]), points01)
def test_monotone_comparison(K, f, h, x):
    g = combine("max", f, parse_function(h))
    assert extend_1d(f, K, x) <= extend_1d(g, K, x)


@settings(max_examples=200)
@given(domains(), points01)
def test_agrees_on_K(K, x):
    f = parse_function("poly:1,-3,2")
    if K.contains((x,)):
        assert extend_1d(f, K, x) == f(x)


@settings(max_examples=200)
@given(domains(), monotone_fns, points01)
def test_increasing_sequence_preserved(K, f, x):
    vals = [extend_1d(combine("max", f, parse_function(f"const:{c}")), K, x) for c in (-2, 0, F(1, 2), 1, 3)]
    assert vals == sorted(vals)


def test_pointwise_convergence_preserved():
    K = domain((F(3, 8), F(5, 8)), (F(3, 4), F(7, 8)))
    for x in (F(1, 2), F(13, 16), F(1, 4)):
        vals = [extend_1d(parse_function(f"power:{n}"), K, x) for n in range(1, 130)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < F(1, 10 ** 6)
    assert all(extend_1d(parse_function(f"power:{n}"), K, F(1)) == 1 for n in range(1, 20))


def test_continuity_at_gap_endpoints():
    K = domain((F(1, 4), F(1, 2)))
    f = parse_function("cos-power:1,1")
    for e in (F(1, 4), F(1, 2)):
        diffs = [abs(extend_1d(f, K, e + F(1, 2 ** k)) - extend_1d(f, K, e))
                 + abs(extend_1d(f, K, e - F(1, 2 ** k)) - extend_1d(f, K, e)) for k in range(4, 12)]
        assert all(a >= b for a, b in zip(diffs, diffs[1:]))
        assert diffs[-1] < diffs[0] / 64


# d-dimensional averaging ----------------------------------------------------------

HOLE = ClosedComplementDomain(SQUARE, Multirectangle((Rectangle((Interval(F(1, 4), F(3, 4)),
                                                                 Interval(F(1, 4), F(3, 4)))),)))
XY = parse_function("prod(poly:0,1;poly:0,1)")


@pytest.fixture(scope="module")
def xy_on_hole():
    return Tonelli(XY, HOLE, h=1 / 64)


@pytest.fixture(scope="module")
def bigger_on_hole():
    g = combine("max", XY, parse_function("prod(const:1/4;const:1)"))
    return Tonelli(g, HOLE, h=1 / 64)


plane_points = st.tuples(st.builds(F, st.integers(-32, 96), st.just(64)), st.builds(F, st.integers(-32, 96), st.just(64)))


@settings(max_examples=500)
@given(plane_points)
def test_nd_monotone_in_n(xy_on_hole, x):
    seq = xy_on_hole.sequence(x, 6)
    assert all(b >= a - 1e-15 for a, b in zip(seq, seq[1:]))


@settings(max_examples=500)
@given(plane_points, st.integers(0, 8))
def test_nd_exact_on_K(xy_on_hole, x, n):
    if HOLE.contains(x):
        assert xy_on_hole(x, n) == x[0] * x[1]


@settings(max_examples=300)
@given(plane_points, st.integers(0, 6))
def test_nd_bounds_and_comparison(xy_on_hole, bigger_on_hole, x, n):
    v = xy_on_hole(x, n)
    assert xy_on_hole.lo <= v <= xy_on_hole.hi
    assert v <= bigger_on_hole(x, n) + 1e-15


def test_nd_formula_by_hand():
    # K = [1,2] on the line, f = x: M(0,r) = min(r,2) for r >= 1
    T = Tonelli(lambda X: X[:, 0], RectUnion((box1(1, 2),)), h=1 / 1024)
    for n in range(5):
        expected = sum(min(1 + k / 2 ** n, 2.0) for k in range(2 ** n)) / 2 ** n
        assert abs(T((0,), n) - expected) < 1 / 512


def test_nd_constant():
    T = Tonelli(lambda X: np.full(len(X), 2.5), HOLE, h=1 / 16)
    assert all(T((F(a, 8), F(b, 8)), 5) == 2.5 for a in range(-4, 13) for b in range(-4, 13))


def test_extend_nd_wrapper():
    assert extend_nd(XY, HOLE, (F(1, 2), F(1, 2)), n=4, h=1 / 32) > 0


def test_sampler_certification():
    with pytest.raises(SamplerTooCoarse):
        Tonelli(XY, HOLE, h=1 / 4, tol=1e-3, lipschitz=2.0)
    with pytest.raises(SamplerTooCoarse):
        Tonelli(XY, HOLE, h=1 / 4, tol=1e-3)
    Tonelli(XY, HOLE, h=1 / 4096, tol=1e-3, lipschitz=2.0)


def test_circle_max():
    T = Tonelli(lambda X: np.ones(len(X)), Circle(), h=1e-2)
    assert [T((0.0, 0.0), n) for n in range(8)] == [1.0] * 8
    T = Tonelli(lambda X: 1 + X[:, 0], Circle(), h=1e-2)
    assert all(T((0.0, 0.0), n) == pytest.approx(2.0, abs=1e-12) for n in range(6))


def test_circle_oscillation():
    seq = circle_sequence_at_origin(10)
    assert seq == [0.0, 1.0] * 5
    # the functions themselves tend to zero pointwise on the circle
    th = np.linspace(0.01, 2 * math.pi - 0.01, 200)
    pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    assert circle_hat(400)(pts).max() == 0.0
