"""Acceptance criteria, one test each.  Every test prints a PASS/FAIL line and
the lines are repeated in the terminal summary."""

import io
import json
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acceptance_log import criterion
from oracles import closed_form_dyadic, dyadic_cover_length, inclusion_exclusion_volume, sweep_line_length
from qcint.cantor import CantorKind, build_stage, removed_measure
from qcint.catalog import indicator, parse_function, parse_sequence
from qcint.cli import EXIT_OK, run
from qcint.convergence import (HypothesisViolated, UnboundedDomain, check_dominated, check_monotone,
                               egorov_witness, fatou_gap)
from qcint.fubini import PASS, NotSummable, fubini_check, iterated_integrate, section_identity_check
from qcint.lebesgue import abs_continuity_probe, exterior_interior_measure, integrate_bounded, measure
from qcint.qc import combine
from qcint.riemann import dini_test, riemann_integrate
from qcint.sets import (Interval, Multirectangle, OpenSet, Rectangle, Topology, disjointify_1d, dyadic_decompose,
                        length)
from qcint.tietze import Circle, ClosedComplementDomain, Tonelli, extend_1d

UNIT = Rectangle.parse("[0,1]")
SQUARE = Rectangle.parse("[0,1]x[0,1]")


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, json.loads(out.getvalue())


def test_c01_dirichlet_integral():
    with criterion(1, "Dirichlet integral is exactly 0 at every stage", budget=1.0):
        code, r = cli("integrate", "--fn", "dirichlet", "--domain", "[0,1]")
        assert code == EXIT_OK
        assert r["value"] == "0/1" and r["errorBound"] == "0/1"
        assert r["trace"]
        assert all(s["value"] == "0/1" and s["tol"] == 0 for s in r["trace"])


def test_c02_cantor_measures():
    with criterion(2, "SVC and ternary removed measures", budget=1.0):
        svc, ternary = CantorKind.parse("svc"), CantorKind.parse("ternary")
        for J in range(21):
            expected = F(1, 2) * (1 - F(1, 2 ** J))
            assert removed_measure(svc, J) == expected
            assert F(1, 2) - removed_measure(svc, J) == F(1, 2 ** (J + 1))
            assert removed_measure(ternary, J) == 1 - F(2, 3) ** J
            # independent: stage j removes 2**(j-1) gaps of the stated length
            steps_svc = sum(2 ** (i - 1) * svc.removed_length(i) for i in range(1, J + 1))
            steps_ter = sum(2 ** (i - 1) * ternary.removed_length(i) for i in range(1, J + 1))
            assert steps_svc == expected and steps_ter == 1 - F(2, 3) ** J
        # independent: lengths of the intervals actually removed by the construction
        for J in range(1, 13):
            assert build_stage(svc, J).measure_removed == F(1, 2) * (1 - F(1, 2 ** J))
            assert build_stage(ternary, J).measure_removed == 1 - F(2, 3) ** J


AGREEMENT = ["power:2", "step:0,1/2,1,2,5",
             "power:1", "power:3", "poly:1,-2,3", "cos-power:1,1", "cos-power:2,1", "cos-power:3,2",
             "rpow:1/2", "abs(poly:-1/2,1)", "max(power:2,poly:1/4)", "min(power:1,poly:1,-1)"]


def test_c03_riemann_lebesgue_agreement():
    tol = 1e-8
    with criterion(3, f"Riemann and Lebesgue agree on {len(AGREEMENT)} functions", budget=30.0):
        for name in AGREEMENT:
            f = parse_function(name)
            lebesgue = integrate_bounded(f, UNIT, stages=64, riemann_tol=tol)
            riemann = riemann_integrate(f, UNIT, tol)
            assert abs(float(lebesgue.value) - riemann.value) <= float(lebesgue.error_bound) + tol, name


def test_c04_dini():
    with criterion(4, "Dini test: thomae passes, dirichlet fails", budget=10.0):
        thomae = parse_function("thomae")
        for alpha in (F(1, 5), F(1, 10)):
            for eps in (F(1, 10), F(1, 100)):
                r = dini_test(thomae, UNIT, alpha, eps)
                assert r.passed and r.heavy_length < eps
        dirichlet = parse_function("dirichlet")
        for alpha in (F(1, 2), F(1, 4), F(1, 100)):
            r = dini_test(dirichlet, UNIT, alpha, F(1, 2), max_n=1024)
            assert not r.passed and r.heavy_length == 1


MONOTONE = ["power:1", "power:2", "power:5", "step:0,1/2,1,2,5", "step:0,1/3,1,-1,4", "poly:1,2,3",
            "tplus:1/2(power:1)", "sum(power:3,step:0,1/4,1,0,1)"]


@st.composite
def domains_1d(draw):
    cuts = sorted(draw(st.lists(st.integers(1, 63), max_size=8, unique=True)))
    gaps = [Rectangle.of(Interval(F(a, 64), F(b, 64))) for a, b in zip(cuts[::2], cuts[1::2])]
    return ClosedComplementDomain(UNIT, Multirectangle(tuple(gaps)))


def test_c05_tietze_properties():
    with criterion(5, "Tietze bound preservation, comparison, averaging and circle"):
        points = st.builds(F, st.integers(0, 128), st.just(128))

        @settings(max_examples=500, deadline=None, derandomize=True)
        @given(domains_1d(), st.sampled_from(MONOTONE), st.sampled_from(["const:0", "poly:1/2,-1", "cos-power:1,1"]),
               points)
        def one_dimensional(K, name, other, x):
            f = parse_function(name)
            a, b = K.extremes()
            v = extend_1d(f, K, x)
            assert isinstance(v, F) and f(a) <= v <= f(b)
            assert v <= extend_1d(combine("max", f, parse_function(other)), K, x)

        one_dimensional()

        hole = ClosedComplementDomain(SQUARE, Multirectangle((Rectangle.parse("[1/4,3/4]x[1/4,3/4]"),)))
        xy = parse_function("prod(poly:0,1;poly:0,1)")
        T = Tonelli(xy, hole, h=1 / 64)
        plane = st.tuples(st.builds(F, st.integers(-32, 96), st.just(64)),
                          st.builds(F, st.integers(-32, 96), st.just(64)))

        @settings(max_examples=500, deadline=None, derandomize=True)
        @given(plane)
        def averaging(x):
            seq = T.sequence(x, 6)
            assert all(b >= a - 1e-15 for a, b in zip(seq, seq[1:]))
            if hole.contains(x):
                assert all(v == x[0] * x[1] for v in seq)

        averaging()

        # cos^2 - sin peaks at 5/4; the sampled circle has spacing 1e-2
        for f, top in [(lambda X: np.ones(len(X)), 1.0), (lambda X: 1 + X[:, 0], 2.0),
                       (lambda X: X[:, 0] ** 2 - X[:, 1], 1.25)]:
            C = Tonelli(f, Circle(), h=1e-2)
            assert all(C((0.0, 0.0), n) == C.hi for n in range(6))
            assert C.hi == pytest.approx(top, abs=1e-4)


SIGMAS = [F(1, 2), F(1, 4), F(1, 8), F(1, 16)]


def test_c06_egorov():
    with criterion(6, "Egorov witness for x^n with one O across sigma", budget=10.0):
        seq = parse_sequence("power:n")
        w = egorov_witness(seq, F(1, 8), SIGMAS)
        assert w.length < F(1, 8) and w.passed
        assert [row.sigma for row in w.table] == SIGMAS
        assert all(row.passed and row.sup < row.sigma for row in w.table)
        for sigma in SIGMAS:
            assert egorov_witness(seq, F(1, 8), [sigma]).O == w.O
        with pytest.raises(UnboundedDomain):
            egorov_witness(parse_sequence("trapezoid:n"), F(1, 8), SIGMAS)


def test_c07_convergence_suite():
    with criterion(7, "dominated, Fatou and monotone convergence checks", budget=10.0):
        with pytest.raises(HypothesisViolated):
            check_dominated(parse_sequence("spike:n"))
        assert abs(float(fatou_gap(parse_sequence("spike:n")).gap) - 1) <= 1e-6
        r = check_dominated(parse_sequence("power:n"))
        assert r.passed and r.gap <= 1e-6
        with pytest.raises(HypothesisViolated) as e:
            check_monotone(parse_sequence("tail-indicator:n"))
        assert e.value.report.violation["kind"] == "not increasing"


def random_boxes(rng, dim, count):
    boxes = []
    for _ in range(count):
        sides = []
        for _ in range(dim):
            a = F(rng.randint(-8, 8), rng.randint(1, 4))
            sides.append((a, a + F(rng.randint(1, 8), rng.randint(1, 4))))
        boxes.append(sides)
    return boxes


def as_multirectangle(boxes, rng, topology=None):
    topo = list(Topology)
    return Multirectangle(tuple(Rectangle(tuple(Interval(lo, hi, topology or rng.choice(topo)) for lo, hi in b))
                                for b in boxes))


def test_c08_fubini():
    with criterion(8, "Fubini on xy, section identity, exp-abs-y gate", budget=60.0):
        xy = parse_function("prod(poly:0,1;poly:0,1)")
        rep = fubini_check(xy, SQUARE)
        assert rep.verdict == PASS
        values = [rep.direct] + [iterated_integrate(xy, o, SQUARE) for o in [(0, 1), (1, 0)]]
        assert all(abs(float(v.value) - 0.25) <= 1e-6 for v in values)
        rng = random.Random(8)
        for dim in (2, 3):
            for _ in range(20):
                boxes = random_boxes(rng, dim, rng.randint(1, 5))
                A = as_multirectangle(boxes, rng)
                srep = section_identity_check(A, rng.randrange(dim))
                assert srep.passed and isinstance(srep.integral, F)
                assert srep.volume == srep.integral == inclusion_exclusion_volume(boxes)
        with pytest.raises(NotSummable):
            fubini_check(parse_function("exp-abs-y"))


PROBE = ["const:1", "step:0,1/2,1,-2,5", "step:0,1/3,1,3,-1", "poly:1,-1", "neg(step:0,1/4,1,1,2)"]


def test_c09_measure_suite():
    with criterion(9, "measure via indicators, brackets, absolute-continuity probe"):
        rng = random.Random(9)
        for _ in range(100):
            boxes = random_boxes(rng, 1, rng.randint(1, 6))
            E = as_multirectangle(boxes, rng)
            oracle = sweep_line_length([b[0] for b in boxes])
            assert measure(indicator(E)) == length(disjointify_1d(as_multirectangle(boxes, rng, Topology.OPEN))) == oracle
            lo, hi = min(b[0][0] for b in boxes), max(b[0][1] for b in boxes)
            br = exterior_interior_measure(E, Rectangle.of(Interval(lo, hi)), F(1, 64))
            assert br.exterior[0] <= oracle <= br.exterior[1]
            assert br.interior[0] <= oracle <= br.interior[1]
        for seed, name in enumerate(PROBE):
            table = abs_continuity_probe(parse_function(name).restricted(UNIT), count=8, seed=seed)
            assert table.bounded_check is True
            for row in table.rows:
                assert isinstance(row.integral, F)
                assert abs(row.integral) <= table.bound * row.measure


def test_c10_dyadic_decomposition():
    with criterion(10, "dyadic decomposition of the open unit cube", budget=30.0):
        for d in (1, 2):
            O = OpenSet.of(Rectangle(tuple(Interval.open(F(0), F(1)) for _ in range(d))))
            box = Rectangle(tuple(Interval(F(0), F(1)) for _ in range(d)))
            for J in range(13):
                L = length(dyadic_decompose(O, J, box))
                closed = (1 - F(2) ** (1 - J)) ** d if J >= 1 else F(0)
                assert L == closed == closed_form_dyadic(d, J) == dyadic_cover_length(d, J)
