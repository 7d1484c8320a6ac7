import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from cmsflow.model import AsymptoticExpr
from cmsflow.series import (
    BertrandClass,
    Comparison,
    Status,
    classify_terms,
    compare_to,
    convergence_set,
    parametric_levels,
    sum_series,
)

q = st.fractions(min_value=-3, max_value=3, max_denominator=8)


@pytest.mark.parametrize("label,kw,ref", oracles.closed_form_series(), ids=lambda v: v if isinstance(v, str) else "")
def test_closed_form_series_certified(label, kw, ref):
    oracles.check_series_case(kw, ref)


@pytest.mark.parametrize("p,q_,r,conv", [
    (2, 0, 0, True), (1, 0, 0, False), (1, 2, 0, True), (1, 1, 0, False),
    (1, 1, 2, True), (1, 1, 1, False), (Fraction(1, 2), 5, 5, False),
])
def test_bertrand_criterion(p, q_, r, conv):
    assert BertrandClass(Fraction(0), Fraction(p), Fraction(q_), Fraction(r)).convergent is conv


def test_exponential_rate_decides_first():
    assert BertrandClass(Fraction(-1), Fraction(-9), Fraction(0), Fraction(0)).convergent
    assert not BertrandClass(Fraction(1, 100), Fraction(9), Fraction(0), Fraction(0)).convergent


def test_weight_lowers_next_level():
    e = AsymptoticExpr(c1=-1)
    assert classify_terms(3, e).p == 3
    assert classify_terms(3, e, weight=AsymptoticExpr(lin=1)).p == 2
    assert classify_terms(2, e, weight=AsymptoticExpr(lin=1)).p == 1


@given(q, q, q)
def test_convergence_set_agrees_with_pointwise_class(a1, b1, x):
    base, slope = AsymptoticExpr(c1=a1), AsymptoticExpr(c1=b1, c2=-1)
    cs = convergence_set(parametric_levels(base, slope))
    e = AsymptoticExpr(c1=a1 + x * b1, c2=-x)
    assert (x in cs) == classify_terms(1, e).convergent


def test_divergent_series_reported():
    sv = sum_series(1, AsymptoticExpr(c1=-1))
    assert sv.status is Status.DIVERGENT and sv.divergent


def test_finite_sum_exact_enough():
    sv = sum_series(1, AsymptoticExpr(lin=-1), n_end=9)
    ref = sum(math.exp(-n) for n in range(10))
    assert sv.lo <= ref <= sv.hi
    assert sv.hi - sv.lo < 1e-13


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=1.05, max_value=4.0), st.integers(1, 6))
def test_zeta_family_brackets(p, s):
    from scipy.special import zeta
    sv = sum_series(Fraction(p), AsymptoticExpr(c1=-1, s1=s))
    ref = float(zeta(p, s))
    assert sv.lo - 1e-15 * ref <= ref <= sv.hi + 1e-15 * ref


def test_slowly_convergent_log_series_stays_fast():
    # sum (n+2)^{-1} log(n+2)^{-2}: tail dominates, quadrature must resolve the log factor
    e = AsymptoticExpr(c1=-1, c2=-2, s1=2, s2=2)
    sv = sum_series(1, e, tol=1e-10)
    assert sv.status is Status.FINITE
    assert sv.hi - sv.lo <= 1e-9 * sv.hi


def test_compare_to_threshold():
    e = AsymptoticExpr(lin=-1)  # sum e^{-n} = e/(e-1) ~ 1.582
    assert compare_to(1, e, 1.5) is Comparison.ABOVE
    assert compare_to(1, e, 1.6) is Comparison.BELOW
    assert compare_to(1, AsymptoticExpr(c1=-1), 10.0) is Comparison.ABOVE


def test_term_cap_env(monkeypatch):
    monkeypatch.setenv("THERMO_MAX_TERMS", "2048")
    sv = sum_series(Fraction(101, 100), AsymptoticExpr(c1=-1, s1=1), tol=1e-15)
    assert sv.n_terms <= 1 << 20
    assert sv.lo <= 100.5779 <= sv.hi or sv.status is Status.INDETERMINATE
