from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from qcint.catalog import parse_function, parse_sequence
from qcint.convergence import (HypothesisViolated, UnboundedDomain, check_dominated, check_monotone, dyadic_indices,
                               egorov_witness, fatou_gap, sampled_indices, wm_grid)

SIGMAS = [F(1, 2), F(1, 4), F(1, 8), F(1, 16)]


# w_m -------------------------------------------------------------------------------

def test_wm_constant():
    w = wm_grid(parse_sequence("power:0"), 3, 16, [F(k, 8) for k in range(9)])
    assert set(w.values) == {0}


def test_wm_powers():
    w = wm_grid(parse_sequence("power:n"), 2, 8, [F(1, 4), F(1, 2), F(3, 4)])
    assert w.at(F(3, 4)) == F(3, 4) ** 3 - F(3, 4) ** 10
    assert w.at(F(1, 4)) == F(1, 4) ** 3 - F(1, 4) ** 10


def test_wm_trapezoid_passed():
    seq = parse_sequence("trapezoid:n")
    w = wm_grid(seq, 20, 32, [F(1, 2), F(1), F(3, 2)])
    assert set(w.values) == {0}


@settings(max_examples=30)
@given(st.sampled_from(["power:n", "cut-ramp:n", "alternating:n", "qn-indicator:n"]), st.integers(0, 12))
def test_wm_nonincreasing_in_m(template, m):
    seq = parse_sequence(template)
    grid = [F(k, 16) for k in range(17)]
    a, b = wm_grid(seq, m, 16, grid), wm_grid(seq, m + 1, 15, grid)
    # the window for m+1 is contained in the one for m
    assert all(x >= y for x, y in zip(a.values, b.values))


@settings(max_examples=30)
@given(st.integers(0, 6), st.integers(1, 12))
def test_vnm_nondecreasing_in_n(m, n):
    seq = parse_sequence("power:n")
    grid = [F(k, 8) for k in range(9)]
    a, b = wm_grid(seq, m, n, grid), wm_grid(seq, m, n + 1, grid)
    assert all(x <= y for x, y in zip(a.values, b.values))


def test_sampled_indices():
    idx = sampled_indices(3, 1000, dense=10)
    assert idx[:11] == list(range(3, 14)) and idx[-1] == 1000
    assert idx == sorted(set(idx))


# Egorov ----------------------------------------------------------------------------

def test_egorov_powers():
    w = egorov_witness(parse_sequence("power:n"), F(1, 8), SIGMAS)
    assert w.length < F(1, 8) and w.passed
    # O covers a left neighbourhood of 1 (at 1 itself f_n = 1 = f)
    assert any(r.sides[0].contains(1 - F(1, 10 ** 6)) for r in w.O.components)
    for row in w.table:
        assert row.passed and row.sup < row.sigma


def test_egorov_same_O_across_sigma():
    seq = parse_sequence("power:n")
    a = egorov_witness(seq, F(1, 8), SIGMAS[:2])
    b = egorov_witness(seq, F(1, 8), SIGMAS + [F(1, 64)])
    assert a.O == b.O and a.levels == b.levels


def test_egorov_constant():
    w = egorov_witness(parse_sequence("power:0"), F(1, 8), SIGMAS)
    assert w.length == 0 and not w.O.components
    assert all(r.passed and r.M == 1 for r in w.table)


def test_egorov_rational_cover():
    w = egorov_witness(parse_sequence("qn-indicator:n"), F(1, 8), SIGMAS)
    assert w.O.tail and w.length < F(1, 8)
    assert all(r.passed for r in w.table)


def test_egorov_unbounded_rejected():
    with pytest.raises(UnboundedDomain):
        egorov_witness(parse_sequence("trapezoid:n"), F(1, 8))
    with pytest.raises(UnboundedDomain):
        egorov_witness(parse_sequence("tail-indicator:n"), F(1, 8))


def test_egorov_bad_eps():
    with pytest.raises(ValueError):
        egorov_witness(parse_sequence("power:n"), 0)


# convergence theorems ----------------------------------------------------------------

def test_monotone_cut_ramp():
    r = check_monotone(parse_sequence("cut-ramp:n"))
    assert r.passed and r.integral_of_limit == F(1, 2)
    assert abs(r.limit_of_integrals - 0.5) <= r.error


def test_monotone_constant():
    r = check_monotone(parse_sequence("power:2"))
    assert r.passed and r.gap == 0


def test_monotone_decreasing_flagged():
    with pytest.raises(HypothesisViolated) as e:
        check_monotone(parse_sequence("tail-indicator:n"))
    assert e.value.report.violation["kind"] == "not increasing"


def test_monotone_negative_flagged():
    with pytest.raises(HypothesisViolated):
        check_monotone(parse_sequence("poly:-1,n"))


def test_dominated_spike_violation():
    with pytest.raises(HypothesisViolated) as e:
        check_dominated(parse_sequence("spike:n"))
    rep = e.value.report
    assert rep.violation["kind"] == "no summable dominator"
    assert all(v == 1 for v in rep.integrals) and rep.integral_of_limit == 0


def test_dominated_spike_explicit_bound():
    with pytest.raises(HypothesisViolated) as e:
        check_dominated(parse_sequence("spike:n"), parse_function("power:0"))
    assert e.value.report.violation["kind"] == "not dominated"


def test_dominated_powers():
    r = check_dominated(parse_sequence("power:n"), parse_function("power:0"))
    assert r.passed and r.gap <= 1e-6
    r = check_dominated(parse_sequence("power:n"))
    assert r.passed and r.gap <= 1e-6


def test_dominated_bounded_alternating_has_no_limit():
    with pytest.raises(ValueError):
        check_dominated(parse_sequence("alternating:n"), parse_function("power:0"), top_exp=6)


def test_fatou_spike():
    r = fatou_gap(parse_sequence("spike:n"))
    assert r.passed and abs(float(r.gap) - 1) <= 1e-6


def test_fatou_constant():
    r = fatou_gap(parse_sequence("power:3"))
    assert r.gap == 0 and r.passed


def test_fatou_alternating():
    r = fatou_gap(parse_sequence("alternating:n"))
    assert r.gap == F(1, 2) and r.limit_of_integrals == F(1, 2)


def test_fatou_negative_rejected():
    with pytest.raises(HypothesisViolated):
        fatou_gap(parse_sequence("poly:-1,n"))


def test_report_dict():
    d = check_dominated(parse_sequence("power:n"), top_exp=6).as_dict()
    assert d["law"] == "dominated" and d["indices"] == dyadic_indices(1, 6)
