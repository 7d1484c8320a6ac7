import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmsflow.mp import (
    ConvergenceFailure,
    build_branches,
    left_inverse,
    mp_deriv,
    mp_equilibrium,
    mp_flow_entropy,
    mp_map,
    roof_at,
)

ALPHAS = (0.5, 1.0, 2.0)


@pytest.fixture(scope="module", params=ALPHAS)
def small(request):
    return build_branches(request.param, 300)


def test_map_fixes_endpoints():
    for a in ALPHAS:
        assert mp_map(0.0, a) == 0.0
        assert mp_map(0.5, a) == 0.0
        assert mp_map(0.5 - 1e-12, a) == pytest.approx(1.0)
        assert mp_deriv(0.0, a) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(ALPHAS), st.floats(1e-6, 1.0))
def test_left_inverse_roundtrip(alpha, y):
    x = left_inverse(np.array([y]), alpha)
    assert 0 < x[0] <= 0.5
    assert x[0] * (1 + 2**alpha * x[0] ** alpha) == pytest.approx(y, rel=1e-13, abs=1e-15)


def test_roof_brackets_are_genuine(small):
    u = np.linspace(0.005, 0.995, 100)
    for a in small.n:
        lo, hi = small.left[a - 1], small.right[a - 1]
        g = roof_at(small, int(a), lo + (hi - lo) * u)
        assert np.all(g >= small.tau_lo[a - 1] - 1e-9)
        assert np.all(g <= small.tau_hi[a - 1] + 1e-9)


def test_cylinders_tile_right_half(small):
    assert small.right[0] == 1.0
    assert np.allclose(small.left[:-1], small.right[1:], rtol=0, atol=0)
    assert np.all(small.cyl_len > 0)
    assert np.all(np.diff(small.tau_lo) > 0)


def test_cylinder_decay_exponent(small):
    a = small.n[100:]
    slope = np.polyfit(np.log(a), np.log(small.cyl_len[100:]), 1)[0]
    assert -slope == pytest.approx(1 + 1 / small.alpha, abs=0.15)


def test_entropy_bracket_contains_one(small):
    b = mp_flow_entropy(small)
    assert b.lo <= 1.0 <= b.hi
    naive = mp_flow_entropy(small, method="naive")
    assert naive.lo <= 1.0 <= naive.hi
    assert b.width < naive.width


def test_width_shrinks_with_branches():
    widths = [mp_flow_entropy(build_branches(1.0, n)).width for n in (250, 1000, 2000)]
    assert widths == sorted(widths, reverse=True)


def test_tie_with_cusp_gives_two_measures():
    r = mp_equilibrium(1.0, 500, scale=-1, cusp_value=0.0)
    assert r.verdict == "tie" and r.equilibrium == "TwoExist"


def test_cusp_dominates():
    r = mp_equilibrium(1.0, 500, scale=0, cusp_value=2.0)
    assert r.verdict == "cusp measure unique" and r.pressure == 2.0


@pytest.mark.parametrize("alpha,base", [(0.5, "PositiveRecurrent"), (2.0, "NullRecurrent")])
def test_base_class_from_gamma(alpha, base):
    assert mp_equilibrium(alpha, 500).base_class == base


def test_invalid_inputs():
    with pytest.raises(ValueError):
        build_branches(0.0, 10)
    with pytest.raises(ValueError):
        build_branches(1.0, 1)
    assert issubclass(ConvergenceFailure, RuntimeError)
