"""Gurevich pressure by three routes.

* the induced series: on a full shift with first-coordinate potential the
  pressure is log sum_a e^{phi(a)}, and on the renewal shift the base pressure is
  the root p of sum_n e^{phibar_n - p (n+1)} = 1 (or the finiteness boundary when
  the series stays below one there);
* the renewal convolution z_n = sum_k u_k z_{n-k}, which equals the partition
  function Z_n(phi, C_0) exactly;
* Perron eigenvalues of finite truncations, bracketed by Collatz-Wielandt ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .model import AsymptoticExpr, MarkovModel, linear_combine, return_time_expr, to_fraction
from .series import (
    Comparison,
    Interval,
    SeriesValue,
    Terms,
    compare_terms,
    convergence_set,
    parametric_levels,
    sum_terms,
)

INF = float("inf")


class NotIrreducible(ValueError):
    pass


@dataclass(frozen=True)
class PressureValue:
    """status: Finite | PlusInfinity | NonPositiveCertified | Indeterminate."""

    status: str
    lo: float = math.nan
    hi: float = math.nan
    exact: Fraction | None = None
    transient: bool = False
    recurrent: bool | None = None
    note: str = ""

    @property
    def value(self) -> float:
        if self.exact is not None:
            return float(self.exact)
        return 0.5 * (self.lo + self.hi)

    @property
    def err(self) -> float:
        if self.exact is not None:
            return 0.0
        return 0.5 * (self.hi - self.lo)

    @property
    def finite(self) -> bool:
        return self.status in ("Finite", "NonPositiveCertified")

    def as_dict(self) -> dict:
        return {"status": self.status, "value": self.value, "err": self.err,
                "lo": self.lo, "hi": self.hi, "transient": self.transient,
                "exact": None if self.exact is None else str(self.exact)}


PLUS_INF = PressureValue("PlusInfinity", INF, INF)


# ---------------------------------------------------------------------------
# Symbolic normalisation
# ---------------------------------------------------------------------------

def solve_normalized(A: AsymptoticExpr, B: AsymptoticExpr,
                     basis: Sequence[AsymptoticExpr]) -> Fraction | None:
    """Exact x with A + x B == -N for some N in ``basis`` (so sum e^{A + x B} = 1), else None."""
    for N in basis:
        x = _solve_identity(linear_combine(1, A, 1, N), B)
        if x is not None:
            return x
    return None


def _solve_identity(C: AsymptoticExpr, B: AsymptoticExpr) -> Fraction | None:
    """x with C + x B identically zero on every branch, exactly."""
    x = None
    for name in ("c0", "lin", "c1", "c2", "c3"):
        c, b = getattr(C, name), getattr(B, name)
        if b == 0:
            if c != 0:
                return None
            continue
        cand = -c / b
        if x is None:
            x = cand
        elif x != cand:
            return None
    if x is None:
        x = Fraction(0)
    for k, (c, b) in enumerate(((C.c1, B.c1), (C.c2, B.c2), (C.c3, B.c3)), start=1):
        if c != 0 and b != 0 and getattr(C, f"s{k}") != getattr(B, f"s{k}"):
            return None
    try:
        D = linear_combine(1, C, x, B)
    except ValueError:
        return None
    if D.c0 != 0 or any(v != 0 for v in D.coeffs):
        return None
    if any(v != 0 for _, v in D.overrides):
        return None
    return x


def exponent_at(A: AsymptoticExpr, B: AsymptoticExpr, x) -> AsymptoticExpr:
    return linear_combine(1, A, to_fraction(x), B)


# ---------------------------------------------------------------------------
# Induced-series route
# ---------------------------------------------------------------------------

def induced_pressure(u, e: AsymptoticExpr, n_end: int | None = None, tol: float = 1e-12) -> PressureValue:
    """log sum_n e^{u e(n)}: pressure of a first-coordinate potential on a full shift."""
    sv = sum_terms(Terms(u, e, None, 0, n_end), tol=tol)
    return pressure_from_series(sv)


def pressure_from_series(sv: SeriesValue) -> PressureValue:
    if sv.divergent:
        return PLUS_INF
    if sv.finite:
        return PressureValue("Finite", sv.log_lo, sv.log_hi)
    return PressureValue("Indeterminate", sv.log_lo, sv.log_hi, note=sv.reason)


@dataclass(frozen=True)
class RootResult:
    """Outcome of solving sum e^{A + x B} = 1 for the smallest admissible x."""

    lo: float
    hi: float
    exact: Fraction | None
    boundary: Interval
    at_boundary: bool
    boundary_cmp: Comparison | None
    indeterminate: bool = False
    note: str = ""

    @property
    def infinite(self) -> bool:
        return self.boundary.empty


def critical_root(A: AsymptoticExpr, B: AsymptoticExpr, basis: Sequence[AsymptoticExpr] = (),
                  n_end: int | None = None, xtol: float = 1e-13, max_iter: int = 200) -> RootResult:
    """inf{x in the convergence set : sum_n e^{A(n) + x B(n)} <= 1}, B eventually negative.

    The sum is nonincreasing in x. Returns the exact boundary when the sum there is <= 1,
    an exact symbolic root when one is recognised, otherwise a certified bisection bracket.
    """
    if n_end is None:
        cs = convergence_set(parametric_levels(A, B))
    else:
        cs = Interval(-INF, INF)
    if cs.empty:
        return RootResult(INF, INF, None, cs, False, None)
    if cs.hi != INF:
        raise ValueError("sum must be nonincreasing in the parameter")

    def cmp(x):
        return compare_terms(Terms(1, exponent_at(A, B, x), None, 0, n_end), 1.0)

    sym = solve_normalized(A, B, basis)
    if sym is not None and sym in cs:
        return RootResult(float(sym), float(sym), sym, cs, sym == cs.lo, None)

    lo = cs.lo
    bcmp = None
    if lo != -INF and cs.lo_closed:
        bcmp, _ = cmp(lo)
        if bcmp is Comparison.BELOW:
            return RootResult(float(lo), float(lo), Fraction(lo), cs, True, bcmp)
        if bcmp is Comparison.STRADDLES:
            return RootResult(float(lo), float(lo), None, cs, True, bcmp, indeterminate=True,
                              note="sum at the finiteness boundary is not separable from 1")
    # bracket: find hi with sum < 1
    step = 1.0
    if lo == -INF:
        x_lo = None
        hi = 0.0
    else:
        x_lo = float(lo)
        hi = float(lo) + step
    for _ in range(200):
        c, _ = cmp(hi)
        if c is Comparison.BELOW:
            break
        if c is Comparison.STRADDLES:
            hi += step * 1e-3
            continue
        x_lo = hi
        hi = hi + step
        step *= 2
    else:
        return RootResult(math.nan, math.nan, None, cs, False, bcmp, True, "no upper bracket")
    if x_lo is None:
        x_lo = hi - 1.0
        while cmp(x_lo)[0] is not Comparison.ABOVE:
            x_lo -= step
            step *= 2
            if step > 1e12:
                return RootResult(-INF, hi, None, cs, False, bcmp, True, "no lower bracket")
    lo_f = x_lo
    if lo != -INF and lo_f <= float(lo):
        lo_f = float(lo)
    hi_f = hi
    lo_finite = not (lo != -INF and lo_f == float(lo) and not cs.lo_closed)
    note = ""

    def bisect(lo_f, hi_f, lo_finite, width):
        for _ in range(max_iter):
            if hi_f - lo_f <= width * max(1.0, abs(hi_f)):
                break
            mid = 0.5 * (lo_f + hi_f)
            if mid <= lo_f or mid >= hi_f:
                break
            c, _ = cmp(mid)
            if c is Comparison.ABOVE:
                lo_f, lo_finite = mid, True
            elif c is Comparison.BELOW:
                hi_f = mid
            else:
                return lo_f, hi_f, lo_finite, "straddle inside bracket"
        return lo_f, hi_f, lo_finite, ""

    lo_f, hi_f, lo_finite, note = bisect(lo_f, hi_f, lo_finite, 1e-4)
    if not note and lo_finite and hi_f - lo_f > xtol * max(1.0, abs(hi_f)):
        polished = _polish(A, B, lo_f, hi_f, n_end, xtol, cmp)
        if polished is not None:
            lo_f, hi_f = polished
    if not note:
        lo_f, hi_f, lo_finite, note = bisect(lo_f, hi_f, lo_finite, xtol)
    return RootResult(lo_f, hi_f, None, cs, False, bcmp, note=note)


def _polish(A, B, lo, hi, n_end, xtol, cmp):
    """Root of the midpoint log-sum by Brent's method, then a certified bracket around it."""

    def F(x):
        sv = sum_terms(Terms(1, exponent_at(A, B, x), None, 0, n_end), tol=1e-13)
        return sv.log_lo if sv.finite else (INF if sv.divergent else math.nan)

    try:
        x = brentq(F, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=100)
    except (ValueError, RuntimeError):
        return None
    delta = xtol * max(1.0, abs(x)) / 4
    for _ in range(6):
        a, b = max(lo, x - delta), min(hi, x + delta)
        ca = cmp(a)[0] if a > lo else Comparison.ABOVE
        cb = cmp(b)[0] if b < hi else Comparison.BELOW
        if ca is Comparison.ABOVE and cb is Comparison.BELOW:
            return a, b
        delta *= 10
    return None


# ---------------------------------------------------------------------------
# Renewal base pressure
# ---------------------------------------------------------------------------

def renewal_base_pressure(phibar: AsymptoticExpr, basis: Sequence[AsymptoticExpr] = (),
                          return_times: AsymptoticExpr | None = None,
                          n_end: int | None = None) -> PressureValue:
    """Gurevich pressure of a first-coordinate potential given its induced values phibar_n."""
    r = return_times or return_time_expr()
    res = critical_root(phibar, r.scale(-1), basis, n_end=n_end)
    return _root_to_pressure(res)


def _root_to_pressure(res: RootResult) -> PressureValue:
    if res.infinite:
        return PLUS_INF
    if res.indeterminate:
        return PressureValue("Indeterminate", res.lo, res.hi, note=res.note)
    if res.exact is not None:
        transient = res.at_boundary and res.boundary_cmp is Comparison.BELOW
        status = "NonPositiveCertified" if transient and res.exact <= 0 else "Finite"
        return PressureValue(status, float(res.exact), float(res.exact), exact=res.exact,
                             transient=transient, recurrent=not transient)
    return PressureValue("Finite", res.lo, res.hi, recurrent=True)


# ---------------------------------------------------------------------------
# Renewal convolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RenewalDP:
    log_u: np.ndarray  # index k = return time, entry 0 unused
    log_z: np.ndarray  # log z_n, n = 0..n_max

    @property
    def n_max(self) -> int:
        return len(self.log_z) - 1

    @property
    def z(self) -> np.ndarray:
        return np.exp(self.log_z)


def renewal_dp(log_u: Sequence[float] | np.ndarray, n_max: int) -> RenewalDP:
    """z_0 = 1, z_n = sum_{k=1..n} u_k z_{n-k}, carried as logarithms.

    ``log_u[k-1]`` is log u_k; missing entries beyond the array mean u_k = 0.
    """
    if n_max < 1:
        raise ValueError("n_max >= 1 required")
    lu = np.full(n_max + 1, -INF)
    src = np.asarray(log_u, dtype=float)[:n_max]
    lu[1:1 + len(src)] = src
    lz = np.full(n_max + 1, -INF)
    lz[0] = 0.0
    for n in range(1, n_max + 1):
        # k = 1..n pairs with z_{n-k}
        lz[n] = logsumexp(lu[1:n + 1] + lz[n - 1::-1][:n])
    return RenewalDP(lu, lz)


def renewal_dp_exact(u: Sequence[Fraction], n_max: int) -> list[Fraction]:
    """Exact-arithmetic version for oracle checks; u[k-1] = u_k."""
    z = [Fraction(1)] + [Fraction(0)] * n_max
    for n in range(1, n_max + 1):
        z[n] = sum((u[k - 1] * z[n - k] for k in range(1, min(n, len(u)) + 1)), Fraction(0))
    return z


def renewal_log_weights(phibar: AsymptoticExpr, n_max: int) -> np.ndarray:
    """log u_k = phibar_{k-1} for return time k = 1..n_max."""
    return phibar.values(np.arange(n_max))


@dataclass(frozen=True)
class DPEstimate:
    estimate: float
    oscillation: float
    trend: float  # slope of the ratio over the window; negative means still decreasing


def dp_pressure_estimate(dp: RenewalDP) -> DPEstimate:
    if dp.n_max < 64:
        raise ValueError("n_max >= 64 required")
    n0 = dp.n_max - dp.n_max // 4
    lz = dp.log_z
    ratios = lz[n0:] - lz[n0 - 1:-1]
    ok = np.isfinite(ratios)
    ratios = ratios[ok]
    idx = np.arange(n0, dp.n_max + 1)[ok]
    slope = float(np.polyfit(idx, ratios, 1)[0]) if ratios.size > 2 else 0.0
    return DPEstimate(float(np.mean(ratios)), float(np.ptp(ratios)), slope)


# ---------------------------------------------------------------------------
# Perron eigenvalues of finite truncations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerronBracket:
    M: int
    lo: float  # log of the CW lower bound
    hi: float
    iterations: int

    @property
    def value(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _check_irreducible(W: np.ndarray):
    n, lab = connected_components(W > 0, directed=True, connection="strong")
    if n != 1:
        raise NotIrreducible(f"{n} strongly connected components")


def perron_bracket(W: np.ndarray, width: float = 1e-12, max_iter: int = 100_000) -> tuple[float, float, int]:
    """log of a Collatz-Wielandt interval for the spectral radius of nonnegative irreducible W."""
    _check_irreducible(W)
    vals, vecs = np.linalg.eig(W)
    k = int(np.argmax(vals.real))
    x = np.abs(vecs[:, k].real)
    if not np.all(x > 0):
        x = np.ones(len(W))
    it = 0
    while True:
        y = W @ x
        ratio = y / x
        lo, hi = float(ratio.min()), float(ratio.max())
        if hi - lo <= width * hi or it >= max_iter:
            return math.log(lo), math.log(hi), it
        x = y / np.linalg.norm(y)
        x = np.maximum(x, 1e-300)
        it += 1


def renewal_truncation(phi_values: Sequence[float], M: int) -> np.ndarray:
    """Weighted renewal graph on states 0..M; weight e^{phi(i)} on every edge out of i."""
    A = np.zeros((M + 1, M + 1))
    A[0, :] = 1.0
    for j in range(1, M + 1):
        A[j, j - 1] = 1.0
    w = np.exp(np.asarray(phi_values[:M + 1], dtype=float))
    return A * w[:, None]


def truncated_perron(model: MarkovModel, phi: Sequence[float] | float,
                     Ms: Iterable[int]) -> list[PerronBracket]:
    """Log-Perron brackets of truncated weighted graphs, one per truncation level M.

    For the renewal shift phi is a table phi(0..max M) or a constant; for a finite SFT
    the full matrix is used at every M.
    """
    out = []
    prev = -INF
    for M in sorted(set(Ms)):
        if M < 1:
            raise ValueError("M >= 1")
        if model.kind == "renewal":
            table = np.full(M + 1, float(phi)) if np.isscalar(phi) else np.asarray(phi, float)
            if len(table) < M + 1:
                raise ValueError("phi table shorter than truncation")
            W = renewal_truncation(table, M)
        elif model.kind == "finite":
            A = model.array()
            m = len(A)
            table = np.full(m, float(phi)) if np.isscalar(phi) else np.asarray(phi, float)[:m]
            W = A * np.exp(table)[:, None]
        else:
            raise ValueError("truncated_perron needs a renewal or finite model")
        lo, hi, it = perron_bracket(W)
        # the truncated graphs are nested, so spectral radii cannot decrease
        assert lo >= prev - 1e-12, (M, lo, prev)
        prev = max(prev, lo)
        out.append(PerronBracket(M, lo, hi, it))
    return out


def finite_pressure(model: MarkovModel, phi: Sequence[float] | float) -> PressureValue:
    """Pressure of a first-coordinate potential on a finite mixing SFT."""
    br = truncated_perron(model, phi, [1])[0]
    return PressureValue("Finite", br.lo, br.hi, recurrent=True)
