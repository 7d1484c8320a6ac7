"""Independent reference computations and property checks shared by the test modules."""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import zeta

from cmsflow.flow import flow_pressure, s_infinity
from cmsflow.inducing import gibbs_weights, project_stats
from cmsflow.model import AsymptoticExpr, enumerate_first_returns, return_time_expr
from cmsflow.phase import NoLimit, alpha_limit
from cmsflow.pressure import renewal_base_pressure, renewal_dp, renewal_dp_exact
from cmsflow.series import sum_series

N_ENUM = 12


# ---------------------------------------------------------------------------
# Renewal partition functions by brute-force loop enumeration
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def loop_visit_counts(n_max: int = N_ENUM) -> dict[int, Counter]:
    """For each length n, a Counter of visit vectors over all loops at 0 of that length.

    Loops are concatenations of first-return words found by walking the graph; a loop's
    weight only depends on how often it visits each state.
    """
    words = enumerate_first_returns(n_max)
    by_len = {k: [Counter(w) for w in ws] for k, ws in words.items()}
    loops: dict[int, Counter] = {0: Counter({(): 1})}
    for n in range(1, n_max + 1):
        acc: Counter = Counter()
        for k in range(1, n + 1):
            for wc in by_len.get(k, []):
                for prev, mult in loops[n - k].items():
                    merged = Counter(dict(prev))
                    merged.update(wc)
                    acc[tuple(sorted(merged.items()))] += mult
        loops[n] = acc
    return loops


def enumerated_z(w: list[Fraction], n_max: int = N_ENUM) -> list[Fraction]:
    """z_n = sum over loops of length n of prod_j w_j^{visits to j}."""
    loops = loop_visit_counts(n_max)
    out = []
    for n in range(n_max + 1):
        tot = Fraction(0)
        for key, mult in loops[n].items():
            term = Fraction(mult)
            for state, c in key:
                term *= w[state] ** c
            tot += term
        out.append(tot)
    return out


def first_return_weights(w: list[Fraction], n_max: int = N_ENUM) -> list[Fraction]:
    """u_k = w_0 w_{k-1} ... w_1 for the first return of length k."""
    u = []
    for k in range(1, n_max + 1):
        p = Fraction(1)
        for j in range(k):
            p *= w[j]
        u.append(p)
    return u


def check_dp_family(w: list[Fraction], n_max: int = N_ENUM) -> None:
    u = first_return_weights(w, n_max)
    exact = renewal_dp_exact(u, n_max)
    brute = enumerated_z(w, n_max)
    assert exact == brute
    dp = renewal_dp(np.log([float(x) for x in u]), n_max)
    ref = np.log([float(x) for x in brute])
    assert np.allclose(dp.log_z, ref, rtol=0, atol=1e-12)


def random_weight_family(rng: np.random.Generator, n_max: int = N_ENUM) -> list[Fraction]:
    return [Fraction(int(rng.integers(1, 20)), int(rng.integers(1, 20))) for _ in range(n_max)]


# ---------------------------------------------------------------------------
# Closed-form series
# ---------------------------------------------------------------------------

def closed_form_series() -> list[tuple[str, dict, float]]:
    """50 (label, sum_series kwargs, reference value) triples with known sums."""
    cases = []
    for p in (1.1, 1.25, 1.5, 2.0, 2.5, 3.0):
        for s in (1, 2, 3, 5):
            kw = dict(u=Fraction(p), e=AsymptoticExpr(c1=-1, s1=s))
            cases.append((f"hurwitz p={p} s={s}", kw, float(zeta(p, s))))
    for a in (0.05, 0.1, 0.3, 0.5, 1.0, 2.0):
        kw = dict(u=1, e=AsymptoticExpr(lin=Fraction(-a)))
        cases.append((f"geometric a={a}", kw, 1.0 / -math.expm1(-a)))
    for a in (0.2, 0.5, 1.0, 1.5, 3.0):
        kw = dict(u=1, e=AsymptoticExpr(lin=Fraction(-a)), weight=AsymptoticExpr(lin=1))
        q = math.exp(-a)
        cases.append((f"n q^n a={a}", kw, q / (1 - q) ** 2))
    for a, p, s in ((0.1, 1, 1), (0.5, 1, 1), (1.0, 2, 1), (0.2, 2, 3), (0.05, 0.5, 2),
                    (1.0, 3, 2), (0.3, 1.5, 1), (2.0, 1, 4), (0.01, 1.2, 1), (0.7, 0.25, 5)):
        kw = dict(u=1, e=AsymptoticExpr(lin=Fraction(-a), c1=Fraction(-p), s1=s))
        ref = float(mpmath.lerchphi(mpmath.exp(-a), p, s))
        cases.append((f"lerch a={a} p={p} s={s}", kw, ref))
    for p, s in ((1.5, 1), (2.0, 1), (2.0, 2), (3.0, 1), (2.5, 3)):
        kw = dict(u=Fraction(p), e=AsymptoticExpr(c1=-1, s1=s), weight=AsymptoticExpr(c1=1, s1=s))
        ref = -float(mpmath.zeta(p, s, 1))
        cases.append((f"log-hurwitz p={p} s={s}", kw, ref))
    assert len(cases) == 50
    return cases


def check_series_case(kw: dict, ref: float) -> None:
    sv = sum_series(tol=1e-12, **kw)
    assert sv.finite, sv
    slack = 8 * np.finfo(float).eps * abs(ref)
    assert sv.lo - slack <= ref <= sv.hi + slack, (sv.lo, ref, sv.hi)
    assert sv.hi - sv.lo <= 1e-10 * max(1.0, abs(ref))


# ---------------------------------------------------------------------------
# Variational inequality on the induced full shift
# ---------------------------------------------------------------------------

def variational_gap(p: np.ndarray, phibar: AsymptoticExpr, P: float) -> float:
    """-sum p log p + sum p phibar - P sum p r (never positive)."""
    n = np.arange(len(p))
    nz = p > 0
    h = -float(np.sum(p[nz] * np.log(p[nz])))
    return h + float(np.dot(p, phibar.values(n))) - P * float(np.dot(p, n + 1.0))


def gibbs_gap(phibar: AsymptoticExpr) -> float:
    """Same functional at the Gibbs vector, through the package's projected statistics."""
    Pv = renewal_base_pressure(phibar)
    P = Pv.exact if Pv.exact is not None else Fraction(Pv.value)
    st = project_stats(gibbs_weights(phibar, P), return_time_expr(), phibar)
    return st.entropy + st.integral_phi - float(P) * st.integral_r


VARIATIONAL_POTENTIALS = (
    AsymptoticExpr(c0=-math.log(2), lin=-math.log(2)),
    AsymptoticExpr(c0=Fraction(1, 3), lin=Fraction(-1, 2)),
    AsymptoticExpr(c1=-3, s1=1),
    AsymptoticExpr(c0=Fraction(1, 2), lin=Fraction(-1, 4), c1=-2, s1=2),
)


def induced_pressure_value(phibar: AsymptoticExpr) -> float:
    return renewal_base_pressure(phibar).value


# ---------------------------------------------------------------------------
# Flow pressure grids
# ---------------------------------------------------------------------------

def flow_grid_violations(spec, grid) -> list[str]:
    """Lower bound s_inf + t alpha and midpoint convexity on an equally spaced grid."""
    s_inf = s_infinity(spec.roof, spec.finite_alphabet)
    if s_inf == math.inf:
        return []
    try:
        alpha = alpha_limit(spec)
    except NoLimit:
        alpha = None
    vals = [flow_pressure(spec, t) for t in grid]
    bad = []
    for t, fp in zip(grid, vals):
        if fp.indeterminate:
            bad.append(f"t={float(t)}: indeterminate")
        elif alpha is not None and fp.hi < float(s_inf + t * alpha) - 1e-12:
            bad.append(f"t={float(t)}: below affine bound")
    for a, m, b in zip(vals, vals[1:], vals[2:]):
        if m.lo > 0.5 * (a.hi + b.hi) + 1e-12:
            bad.append(f"t={float(m.t)}: midpoint convexity")
    return bad
