import csv
import io
from fractions import Fraction

import numpy as np
import pytest

from cmsflow import scenarios as S
from cmsflow.model import AsymptoticExpr, FlowSpec, build_finite_model
from cmsflow.phase import (
    NoLimit,
    Regime,
    alpha_limit,
    fmt,
    interval_I,
    scan,
    to_csv,
)


@pytest.fixture(scope="module")
def two_phase():
    spec = S.flow_spec("two_phase")
    return spec, interval_I(spec)


def test_alpha_limits():
    assert alpha_limit(S.flow_spec("two_phase")) == 0
    assert alpha_limit(S.flow_spec("trans_null")) == 1
    assert alpha_limit(S.flow_spec("improve_case_1")) == -1
    with pytest.raises(NoLimit):
        alpha_limit(FlowSpec(base=build_finite_model([[1, 1], [1, 1]]), roof=AsymptoticExpr(c0=1)))


def test_two_phase_interval(two_phase):
    _, I = two_phase
    assert I.kind == "Interval"
    lo, hi = I.lower, I.upper
    assert 1 < lo.lo and lo.hi < 2 and lo.width <= 1e-6 and lo.certified
    assert 2 < hi.lo and hi.hi < 3 and hi.width <= 1e-6 and hi.certified
    assert I.contains_certified(2.1) and I.excludes_certified(1.5) and I.excludes_certified(2.5)


@pytest.mark.parametrize("name,kind", [
    ("no_phase", "Empty"), ("improve_case_1", "AllReals"), ("improve_case_3", "Empty"),
    ("trans_null", "Interval"),
])
def test_interval_kinds(name, kind):
    assert interval_I(S.flow_spec(name)).kind == kind


def test_scan_regimes(two_phase):
    spec, I = two_phase
    rep = scan(spec, [0.5, 1.5, 2.05, 2.1, 2.15, 3.0], interval=I)
    regimes = [s.regime for s in rep.samples]
    assert regimes == [Regime.ANALYTIC] * 2 + [Regime.AFFINE] * 3 + [Regime.ANALYTIC]
    for s in rep.samples:
        if s.regime is Regime.AFFINE:
            assert s.pressure == 1.0 and s.err == 0.0
        else:
            assert s.pressure - s.err > s.affine_value
    assert len(rep.transition_points) == 2


def test_scan_near_transition_is_fast_and_decided(two_phase):
    spec, I = two_phase
    rep = scan(spec, [1.9, 2.2, 2.3], interval=I)
    assert all(s.regime is Regime.ANALYTIC for s in rep.samples)


def test_no_phase_all_analytic():
    rep = scan(S.flow_spec("no_phase"), np.linspace(0, 2, 5))
    assert {s.regime for s in rep.samples} == {Regime.ANALYTIC}
    assert rep.transition_points == []


def test_csv_layout(two_phase):
    spec, I = two_phase
    text = to_csv(scan(spec, [2.0, 0.0, 1.0], interval=I))
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["t", "pressure", "pressure_err", "regime", "flow_class"]
    assert [r[0] for r in rows[1:]] == ["0", "1", "2"]
    assert rows[3][3] == "Affine"


def test_parallel_scan_matches_serial(two_phase):
    spec, I = two_phase
    grid = [0.25, 2.1, 3.5]
    a = scan(spec, grid, interval=I)
    b = scan(spec, grid, workers=2, interval=I)
    assert to_csv(a) == to_csv(b)


def test_fmt_significant_digits():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(float("inf")) == "inf"
    assert fmt(Fraction(1, 2)) == "0.5"
