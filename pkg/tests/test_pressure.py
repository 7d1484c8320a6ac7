import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from cmsflow.model import AsymptoticExpr, build_finite_model, build_renewal_model
from cmsflow.pressure import (
    NotIrreducible,
    critical_root,
    dp_pressure_estimate,
    finite_pressure,
    induced_pressure,
    perron_bracket,
    renewal_base_pressure,
    renewal_dp,
    renewal_log_weights,
    solve_normalized,
    truncated_perron,
)

LOG2 = math.log(2)
weights = st.lists(st.fractions(min_value=Fraction(1, 9), max_value=9, max_denominator=9),
                   min_size=oracles.N_ENUM, max_size=oracles.N_ENUM)


@settings(max_examples=30, deadline=None)
@given(weights)
def test_dp_matches_loop_enumeration(w):
    oracles.check_dp_family(w)


def test_zero_potential_closed_form():
    P = renewal_base_pressure(AsymptoticExpr())
    assert abs(P.value - LOG2) <= 1e-12
    assert P.recurrent


def test_zero_potential_dp_and_perron():
    n = 200
    est = dp_pressure_estimate(renewal_dp(renewal_log_weights(AsymptoticExpr(), n), n))
    assert abs(est.estimate - LOG2) < 1e-6
    brs = truncated_perron(build_renewal_model(), 0.0, [5, 10, 20, 50])
    los = [b.lo for b in brs]
    assert all(b >= a - 1e-12 for a, b in zip(los, los[1:]))
    assert all(b.hi <= LOG2 + 1e-12 for b in brs)
    assert LOG2 - brs[-1].lo < 1e-3


def test_geometric_potential_pressure_zero():
    c = -Fraction(LOG2)
    P = renewal_base_pressure(AsymptoticExpr(c0=c, lin=c))
    assert abs(P.value) <= 1e-9


def test_golden_mean_finite_pressure():
    P = finite_pressure(build_finite_model([[1, 1], [1, 0]]), 0.0)
    assert P.value == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-12)


def test_perron_requires_irreducible():
    with pytest.raises(NotIrreducible):
        perron_bracket(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_perron_bracket_contains_eigenvalue():
    rng = np.random.default_rng(3)
    W = rng.random((6, 6)) + 0.01
    lo, hi, _ = perron_bracket(W)
    rho = max(abs(np.linalg.eigvals(W)))
    assert lo - 1e-12 <= math.log(rho) <= hi + 1e-12


def test_induced_pressure_log_geometric():
    P = induced_pressure(1, AsymptoticExpr(lin=-1))
    assert P.value == pytest.approx(-math.log(1 - math.exp(-1)), abs=1e-12)


def test_solve_normalized_exact():
    N = AsymptoticExpr(c0=LOG2, lin=LOG2, normalized=True)  # sum 2^{-(n+1)} = 1
    A, B = AsymptoticExpr(), AsymptoticExpr(c0=-1, lin=-1)
    assert solve_normalized(A, B, [N]) == Fraction(LOG2)
    assert solve_normalized(AsymptoticExpr(c1=1), B, [N]) is None


def test_critical_root_brackets_boundary():
    # sum_n e^{-s (n+1)} (n+1)^{-2}: at the boundary s=0 the sum is zeta(2) > 1
    res = critical_root(AsymptoticExpr(c1=-2), AsymptoticExpr(c0=-1, lin=-1))
    assert res.lo < res.hi
    f = lambda s: sum(math.exp(-s * k) / k**2 for k in range(1, 4000))
    assert f(res.hi) <= 1 + 1e-9 and f(res.lo) >= 1 - 1e-9
