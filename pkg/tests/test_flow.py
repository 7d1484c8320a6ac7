import math
from fractions import Fraction

import pytest

from cmsflow import scenarios as S
from cmsflow.flow import (
    Existence,
    RecClass,
    classify_base,
    equilibrium_decision,
    flow_entropy,
    flow_pressure,
    s_infinity,
)
from cmsflow.model import AsymptoticExpr, FlowSpec, build_finite_model, build_renewal_model

CASES = {"a", "b", "i", "ii", "iii", "iv"}


@pytest.mark.parametrize("roof,expected", [
    (AsymptoticExpr(c0=1, lin=1), 0),
    (AsymptoticExpr(c1=2, s1=1), Fraction(1, 2)),
    (AsymptoticExpr(c1=1, c2=2, s1=4, s2=4), 1),
    (AsymptoticExpr(c2=1, s2=2), math.inf),
])
def test_s_infinity_exact(roof, expected):
    assert s_infinity(roof) == expected


def test_finite_alphabet_entropy_is_topological():
    base = build_finite_model([[1, 1], [1, 0]])
    spec = FlowSpec(base=base, roof=AsymptoticExpr(c0=1))
    fp = flow_entropy(spec)
    assert fp.value == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-10)


def test_renewal_unit_roof_entropy_log2():
    spec = FlowSpec(base=build_renewal_model(), roof=AsymptoticExpr(c0=1, lin=1))
    assert flow_entropy(spec).value == pytest.approx(math.log(2), abs=1e-10)


@pytest.mark.parametrize("name,t,flow_cls,eq,case", [
    ("hofbauer_transient", 0, RecClass.TRANSIENT, Existence.NONE, "iv"),
    ("hofbauer_null", 0, RecClass.NULL, Existence.NONE, "iii"),
    ("two_phase", 0, RecClass.POSITIVE, Existence.UNIQUE, "b"),
    ("two_phase", 2, RecClass.TRANSIENT, Existence.NONE, "iv"),
    ("trans_null", 0, RecClass.POSITIVE, Existence.UNIQUE, "a"),
    ("trans_null", 1, RecClass.TRANSIENT, Existence.NONE, "iv"),
    ("improve_case_3", 1, RecClass.POSITIVE, Existence.UNIQUE, "b"),
])
def test_decisions(name, t, flow_cls, eq, case):
    r = equilibrium_decision(S.flow_spec(name), t)
    assert (r.flow_class, r.equilibrium, r.theorem_case) == (flow_cls, eq, case)


@pytest.mark.parametrize("name", ["two_phase", "trans_null", "no_phase", "improve_case_2"])
@pytest.mark.parametrize("t", [0, 1, 2])
def test_case_exclusivity_and_consistency(name, t):
    r = equilibrium_decision(S.flow_spec(name), t)
    assert r.theorem_case in CASES
    unique = r.theorem_case in ("a", "b")
    assert (r.equilibrium is Existence.UNIQUE) == unique
    assert (r.flow_class is RecClass.POSITIVE) == unique
    if r.theorem_case in ("i", "iv"):
        assert r.flow_pressure.sticks


@pytest.mark.parametrize("name,t", [("two_phase", 0), ("no_phase", 1), ("trans_null", 0)])
def test_abramov_recovers_pressure(name, t):
    r = equilibrium_decision(S.flow_spec(name), t)
    st = r.stats
    free_energy = (st.entropy + t * st.integral_phi) / st.integral_tau
    assert free_energy == pytest.approx(r.flow_pressure.value, abs=1e-8)


def test_flow_pressure_sticks_exactly_on_interval():
    fp = flow_pressure(S.flow_spec("two_phase"), Fraction(21, 10))
    assert fp.sticks and fp.exact == 1


def test_flow_pressure_monotone_in_t_for_negative_potential():
    spec = S.flow_spec("no_phase")
    vals = [flow_pressure(spec, t).value for t in (0, Fraction(1, 2), 1)]
    assert vals == sorted(vals)


def test_geometric_base_positive_recurrent():
    c = -Fraction(math.log(2))
    b = classify_base(AsymptoticExpr(c0=c, lin=c))
    assert b.rec_class is RecClass.POSITIVE
    assert b.stats.integral_r == pytest.approx(2.0, abs=1e-9)


def test_hopf_guard():
    from dataclasses import replace
    with pytest.raises(ValueError):
        flow_pressure(replace(S.flow_spec("two_phase"), hopf_ok=False), 0)
