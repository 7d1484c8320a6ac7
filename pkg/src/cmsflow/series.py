"""Certified summation of positive Bertrand-type series.

Terms have the form w(n) * exp(u * E(n)) where E and the optional weight w are
AsymptoticExpr. Convergence is decided exactly from the coefficients; finite
sums are bracketed by a partial sum plus an integral sandwich on the tail that
is valid for convex tails:

    int_{N+1}^inf f + f(N+1)/2  <=  sum_{n>N} f(n)  <=  int_{N+1/2}^inf f.

Tail integrals use graded composite Gauss-Legendre panels after substituting an
iterated logarithm so that the integrand decays exponentially.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import AsymptoticExpr, DomainError, E, to_fraction

EPS = np.finfo(float).eps
DEFAULT_CAP = 10**8
CHUNK = 1 << 20


def max_terms() -> int:
    env = os.environ.get("THERMO_MAX_TERMS")
    return int(float(env)) if env else DEFAULT_CAP


# ---------------------------------------------------------------------------
# Exact convergence classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BertrandClass:
    """Term ~ e^{rate n} n^{-p} (log n)^{-q} (loglog n)^{-r}."""

    rate: Fraction
    p: Fraction
    q: Fraction
    r: Fraction

    @property
    def convergent(self) -> bool:
        if self.rate != 0:
            return self.rate < 0
        if self.p != 1:
            return self.p > 1
        if self.q != 1:
            return self.q > 1
        return self.r > 1

    @property
    def depth(self) -> int:
        """Level whose exponent decides convergence (0 = exponential rate)."""
        if self.rate != 0:
            return 0
        if self.p != 1:
            return 1
        if self.q != 1:
            return 2
        return 3

    def as_dict(self) -> dict:
        return {k: str(getattr(self, k)) for k in ("rate", "p", "q", "r")}


def weight_reduction(weight: AsymptoticExpr | None) -> tuple[int, int, int, int]:
    """How a positive weight lowers (rate, p, q, r): its leading level shifts the next one down."""
    if weight is None:
        return (0, 0, 0, 0)
    lvl, _ = weight.leading()
    red = [0, 0, 0, 0]
    if 0 <= lvl <= 2:
        red[lvl + 1] = 1
    return tuple(red)


def classify_terms(u, e: AsymptoticExpr, weight: AsymptoticExpr | None = None) -> BertrandClass:
    u = to_fraction(u)
    red = weight_reduction(weight)
    return BertrandClass(rate=u * e.lin, p=-u * e.c1 - red[1], q=-u * e.c2 - red[2],
                         r=-u * e.c3 - red[3])


# ---------------------------------------------------------------------------
# Convergence sets of parametrised families
# ---------------------------------------------------------------------------

INF = float("inf")


@dataclass(frozen=True)
class Interval:
    lo: Fraction | float
    hi: Fraction | float
    lo_closed: bool = False
    hi_closed: bool = False
    empty: bool = False

    def __contains__(self, x) -> bool:
        if self.empty:
            return False
        lo_ok = x > self.lo or (self.lo_closed and x == self.lo)
        hi_ok = x < self.hi or (self.hi_closed and x == self.hi)
        return lo_ok and hi_ok

    @property
    def is_all(self) -> bool:
        return not self.empty and self.lo == -INF and self.hi == INF


EMPTY = Interval(0, 0, empty=True)
ALL = Interval(-INF, INF)


def convergence_set(levels: Sequence[tuple[Fraction, Fraction]]) -> Interval:
    """Set of x with lexicographically convergent levels.

    ``levels`` are (a, b) giving L(x) = a + b x for the rate (convergent side L < 0)
    followed by p, q, r (convergent side L > 1). Exact in rationals.
    """
    thresholds = (Fraction(0), Fraction(1), Fraction(1), Fraction(1))

    def better(k, val):
        return val < thresholds[k] if k == 0 else val > thresholds[k]

    for k, (a, b) in enumerate(levels):
        thr = thresholds[k]
        if b == 0:
            if a == thr:
                continue
            return ALL if better(k, a) else EMPTY
        x0 = (thr - a) / b
        # side of x0 where level k is strictly better
        plus_better = better(k, a + b * (x0 + 1))
        point_ok = False
        for j in range(k + 1, len(levels)):
            aj, bj = levels[j]
            val = aj + bj * x0
            if val == thresholds[j]:
                continue
            point_ok = better(j, val)
            break
        if plus_better:
            return Interval(x0, INF, lo_closed=point_ok)
        return Interval(-INF, x0, hi_closed=point_ok)
    return EMPTY


def parametric_levels(base: AsymptoticExpr, slope: AsymptoticExpr,
                      weight: AsymptoticExpr | None = None) -> list[tuple[Fraction, Fraction]]:
    """Levels of exp(base + x * slope) [* weight] as functions of x."""
    red = weight_reduction(weight)
    return [
        (base.lin, slope.lin),
        (-base.c1 - red[1], -slope.c1),
        (-base.c2 - red[2], -slope.c2),
        (-base.c3 - red[3], -slope.c3),
    ]


# ---------------------------------------------------------------------------
# Series values
# ---------------------------------------------------------------------------

class Status(str, Enum):
    FINITE = "Finite"
    DIVERGENT = "Divergent"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class SeriesValue:
    status: Status
    lo: float = math.nan
    hi: float = math.nan
    log_lo: float = math.nan
    log_hi: float = math.nan
    witness: BertrandClass | None = None
    reason: str = ""
    n_terms: int = 0

    @property
    def value(self) -> float:
        return self.lo

    @property
    def err(self) -> float:
        return self.hi - self.lo

    @property
    def finite(self) -> bool:
        return self.status is Status.FINITE

    @property
    def divergent(self) -> bool:
        return self.status is Status.DIVERGENT

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class Terms:
    """Summand w(n) exp(u E(n)) over n_start <= n <= n_end (n_end None = infinite)."""

    u: Fraction
    expr: AsymptoticExpr
    weight: AsymptoticExpr | None = None
    n_start: int = 0
    n_end: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "u", to_fraction(self.u))

    def logs_signs(self, ns: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # scale the coefficients exactly, then evaluate
        g = _scaled(self.expr, self.u).values(ns) if self.u != 0 else np.zeros(len(ns))
        if self.weight is None:
            return g, np.ones_like(g)
        w = self.weight.values(ns)
        with np.errstate(divide="ignore"):
            return g + np.log(np.abs(w)), np.sign(w)

    def classify(self) -> BertrandClass:
        return classify_terms(self.u, self.expr, self.weight)

    def first_tail(self) -> int:
        n = max(self.n_start, self.expr.first_closed)
        if self.weight is not None:
            n = max(n, self.weight.first_closed)
        return n


def _scaled(e: AsymptoticExpr, u: Fraction) -> AsymptoticExpr:
    return e.scale(u) if u != 1 else e


class _Acc:
    """Running sum of signed terms given as (log|t|, sign), kept in log scale."""

    def __init__(self):
        self.m = -INF
        self.pos = 0.0
        self.neg = 0.0
        self.count = 0
        self.rnd = 0.0

    def add(self, logs: np.ndarray, signs: np.ndarray):
        if logs.size == 0:
            return
        self.count += logs.size
        finite = np.isfinite(logs)
        if not finite.any():
            return
        m = float(np.max(logs[finite]))
        if m > self.m:
            scale = math.exp(self.m - m) if self.m > -INF else 0.0
            self.pos *= scale
            self.neg *= scale
            self.rnd *= scale
            self.m = m
        x = np.exp(logs - self.m)
        self.pos += float(np.sum(x[signs > 0]))
        self.neg += float(np.sum(x[signs < 0]))
        # exp turns an absolute exponent error of ~|g| eps into a relative term error
        self.rnd += float(np.sum(x[finite] * (4.0 * np.abs(logs[finite]) + 8.0))) * EPS

    def bounds(self) -> tuple[float, float, float]:
        """(log scale, scaled value, scaled rounding bound)."""
        val = self.pos - self.neg
        rnd = self.rnd + (self.pos + self.neg) * EPS * (8 + 2 * math.log2(self.count + 2))
        return self.m, val, rnd


# ---------------------------------------------------------------------------
# Tail machinery
# ---------------------------------------------------------------------------

def _dlogs(y: np.ndarray):
    l1 = np.log(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        l2 = np.log(l1)
    d1 = 1.0 / y
    dd1 = -1.0 / y**2
    with np.errstate(divide="ignore", invalid="ignore"):
        d2 = 1.0 / (y * l1)
        dd2 = -(l1 + 1.0) / (y * l1) ** 2
        d3 = 1.0 / (y * l1 * l2)
        dd3 = -(l1 * l2 + l2 + 1.0) / (y * l1 * l2) ** 2
    return (d1, d2, d3), (dd1, dd2, dd3)


def _expr_derivs(e: AsymptoticExpr, x: np.ndarray, scale: Fraction = Fraction(1)):
    val = _scaled(e, scale).closed_array(x, check=False)
    g1 = np.full_like(x, float(scale * e.lin))
    g2 = np.zeros_like(x)
    for k, (c, s) in enumerate(zip((e.c1, e.c2, e.c3), e.shifts)):
        if c == 0:
            continue
        d, dd = _dlogs(x + float(s))
        g1 = g1 + float(scale * c) * d[k]
        g2 = g2 + float(scale * c) * dd[k]
    return val, g1, g2


def _probe_points(a: float) -> np.ndarray:
    near = a + np.linspace(0.0, 64.0, 257)
    far = a * np.exp(np.linspace(0.0, math.log(1e300 / max(a, 1.0)), 3000))
    return np.concatenate([near, far])


def tail_is_convex(terms: Terms, a: float) -> bool:
    """Probe f'' >= 0 and constant weight sign on [a, inf) for f = w exp(u E)."""
    x = _probe_points(a)
    with np.errstate(all="ignore"):
        _, g1, g2 = _expr_derivs(terms.expr, x, terms.u)
        if terms.weight is not None:
            w, w1, w2 = _expr_derivs(terms.weight, x)
            if not (np.all(w > 0) or np.all(w < 0)):
                return False
            r1 = w1 / w
            g1 = g1 + r1
            g2 = g2 + w2 / w - r1**2
        conv = g2 + g1**2
    ok = np.isfinite(conv)
    scale = np.maximum(np.abs(g2), g1**2)
    return bool(np.all(conv[ok] >= -64 * EPS * scale[ok]) and ok[: len(ok) // 2].all())


@dataclass
class _TailIntegrand:
    terms: Terms
    depth: int
    s_ref: float = 0.0

    def __post_init__(self):
        e = self.terms.expr
        u = self.terms.u
        self.a = [u * e.c0, u * e.c1, u * e.c2, u * e.c3]
        self.al = u * e.lin
        self.sh = [None, float(e.s1), float(e.s2), float(e.s3)]
        self.scaled = _scaled(e, u) if u != 0 else None
        w = self.terms.weight
        if self.depth >= 1:
            self.s_ref = self.sh[self.depth]
        self.net = [Fraction(0)] + [self.a[k] + (1 if k <= self.depth else 0) for k in (1, 2, 3)]
        self.wlead = -1
        self.wsign = 1.0
        if w is not None:
            self.wlead, c = w.leading()
            self.wsign = 1.0 if c > 0 else -1.0
            if self.depth >= 1 and 0 <= self.wlead <= 2:
                self.net[self.wlead + 1] += 1

    # variable v <-> x
    def v_of_x(self, x: float) -> float:
        X = x + self.s_ref
        if self.depth == 0:
            return x
        v = math.log(X)
        for _ in range(self.depth - 1):
            v = math.log(v)
        return v

    def ells(self, v: np.ndarray):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if self.depth == 1:
                l1 = v
                l2 = np.log(v)
                l3 = np.log(l2)
            elif self.depth == 2:
                l2 = v
                l1 = np.exp(v)
                l3 = np.log(v)
            else:
                l3 = v
                l2 = np.exp(v)
                l1 = np.exp(l2)
        return l1, l2, l3

    def corr(self, s: float, l1, l2):
        d = s - self.s_ref
        if d == 0:
            z = np.zeros_like(l1)
            return z, z, z
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            k1 = np.log1p(d * np.exp(-l1))
            k2 = np.log1p(np.where(np.isinf(l1), 0.0, k1 / l1))
            k3 = np.log1p(np.where(np.isinf(l2), 0.0, k2 / l2))
        return k1, k2, k3

    def log_f(self, v: np.ndarray) -> np.ndarray:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if self.depth == 0:
            x = v
            g = self.scaled.closed_array(x, check=False) if self.scaled is not None \
                else np.zeros_like(x)
            if self.terms.weight is not None:
                with np.errstate(divide="ignore", invalid="ignore"):
                    g = g + np.log(self.wsign * self.terms.weight.closed_array(x, check=False))
            return g
        l1, l2, l3 = self.ells(v)
        ell = [None, l1, l2, l3]
        g = np.full_like(v, float(self.a[0]))
        for k in (1, 2, 3):
            if self.net[k] != 0:
                g = g + float(self.net[k]) * ell[k]
        for k in (1, 2, 3):
            if self.a[k] != 0:
                kk = self.corr(self.sh[k], l1, l2)
                g = g + float(self.a[k]) * kk[k - 1]
        if self.terms.weight is not None:
            g = g + self._log_weight(l1, l2, l3)
        return g

    def _log_weight(self, l1, l2, l3):
        w = self.terms.weight
        sw = [None, float(w.s1), float(w.s2), float(w.s3)]
        coef = [w.lin, w.c1, w.c2, w.c3]
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            L = [None]
            for k in (1, 2, 3):
                k1, k2, k3 = self.corr(sw[k], l1, l2)
                L.append([l1 + k1, l2 + k2, l3 + k3][k - 1])
            x = np.exp(l1) - self.s_ref
            vals = [x, L[1], L[2], L[3]]
            j = self.wlead
            if j == -1:
                return np.full_like(l1, math.log(abs(float(w.c0))))
            lead = float(coef[j]) * vals[j]
            out = math.log(abs(float(coef[j])))
            if j == 0:
                out = out + np.log1p(-self.s_ref * np.exp(-l1))
            elif j == 1:
                out = out + np.log1p(np.where(np.isinf(l1), 0.0, (L[1] - l1) / l1))
            elif j == 2:
                out = out + np.log1p(np.where(np.isinf(l2), 0.0, (L[2] - l2) / l2))
            else:
                out = out + np.log(L[3])
            R = np.where(np.isinf(lead), 0.0, float(w.c0) / lead)
            for k in range(j + 1, 4):
                if coef[k] != 0:
                    R = R + np.where(np.isinf(lead), 0.0, float(coef[k]) * vals[k] / lead)
            return out + np.log1p(R)

    def decay(self) -> float:
        if self.depth == 0:
            return float(self.al)
        return float(self.net[self.depth])


_GL_HI = np.polynomial.legendre.leggauss(20)
_GL_LO = np.polynomial.legendre.leggauss(10)


def _gauss_panels(logf, edges: np.ndarray, M: float) -> tuple[float, float]:
    """Composite Gauss-Legendre of exp(logf - M) over panels; error from a lower-order rule."""
    a, b = edges[:-1, None], edges[1:, None]
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    out = []
    for x, w in (_GL_HI, _GL_LO):
        pts = mid + half * x[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.exp(logf(pts.ravel()).reshape(pts.shape) - M)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        out.append(float(np.sum(half * (vals * w[None, :]))))
    return out[0], abs(out[0] - out[1])


def tail_log_integral(terms: Terms, a: float, cls: BertrandClass) -> tuple[float, float]:
    """(log of int_a^inf f, relative error bound of that integral)."""
    ti = _TailIntegrand(terms, cls.depth)
    v0 = ti.v_of_x(a)
    rate = ti.decay()
    if not rate < 0:
        raise ValueError("tail integrand does not decay")
    span = 60.0 / abs(rate)
    # graded panels resolve power and log factors near v0 when the exponential decay is slow
    h0 = 1e-2 * min(max(1.0, abs(v0)), span)
    offs = np.concatenate([np.linspace(0.0, span, 241), span * np.geomspace(1.0, 1e3, 121),
                           np.geomspace(h0, 1e3 * span, 1 + int(math.log(1e3 * span / h0) / math.log(1.05)))])
    edges = v0 + np.unique(offs)
    G = ti.log_f(edges)
    Gf = G[np.isfinite(G)]
    if Gf.size == 0:
        raise ValueError("tail integrand not finite")
    M = float(np.max(Gf))
    total, err = _gauss_panels(ti.log_f, edges, M)
    # beyond the last edge the integrand is below e^{G_end} and decays at least like e^{rate v / 2}
    g_end = G[-1] - M if np.isfinite(G[-1]) else -INF
    err += math.exp(g_end) * 2.0 / abs(rate) if g_end > -700 else 0.0
    if total <= 0:
        raise ValueError("tail integral underflow")
    return M + math.log(total), err / total + 1e-14


# ---------------------------------------------------------------------------
# Summation
# ---------------------------------------------------------------------------

def _log_add(a: float, b: float) -> float:
    return float(np.logaddexp(a, b))


def _finalize(m: float, scaled_val: float, rnd: float, tail_lo: float, tail_hi: float,
              tail_sign: float, n_terms: int, cls) -> SeriesValue:
    """Combine head (e^m * scaled_val +- e^m * rnd) with a tail in [tail_lo, tail_hi] (log scale)."""
    if m == -INF:
        head_lo_log = head_hi_log = -INF
        lo_s = hi_s = 0.0
    else:
        lo_s, hi_s = scaled_val - rnd, scaled_val + rnd
    if tail_sign >= 0:
        t_lo = math.exp(tail_lo - m) if m > -INF and tail_lo > -INF else 0.0
        t_hi = math.exp(tail_hi - m) if m > -INF and tail_hi > -INF else 0.0
        if m == -INF:
            lo, hi = math.exp(tail_lo) if tail_lo > -INF else 0.0, math.exp(tail_hi) if tail_hi > -INF else 0.0
            return SeriesValue(Status.FINITE, lo, hi, tail_lo, tail_hi, witness=cls, n_terms=n_terms)
        lo_s, hi_s = lo_s + t_lo, hi_s + t_hi
    else:
        t_lo = math.exp(tail_lo - m) if tail_lo > -INF else 0.0
        t_hi = math.exp(tail_hi - m) if tail_hi > -INF else 0.0
        lo_s, hi_s = lo_s - t_hi, hi_s - t_lo
    log_lo = m + math.log(lo_s) if lo_s > 0 else -INF
    log_hi = m + math.log(hi_s) if hi_s > 0 else -INF
    scale = math.exp(m) if m < 709 else INF
    lo = lo_s * scale if lo_s != 0 else 0.0
    hi = hi_s * scale if hi_s != 0 else 0.0
    return SeriesValue(Status.FINITE, lo, hi, log_lo, log_hi, witness=cls, n_terms=n_terms)


def _finite_sum(terms: Terms) -> SeriesValue:
    acc = _Acc()
    n = terms.n_start
    while n <= terms.n_end:
        hi = min(terms.n_end, n + CHUNK - 1)
        acc.add(*terms.logs_signs(np.arange(n, hi + 1)))
        n = hi + 1
    m, val, rnd = acc.bounds()
    cls = terms.classify()
    return _finalize(m, val, rnd, -INF, -INF, 1.0, acc.count, cls)


def _rel_width(sv: SeriesValue) -> float:
    if sv.log_lo > 0 and math.isfinite(sv.log_lo):
        return math.expm1(sv.log_hi - sv.log_lo)
    return sv.hi - sv.lo


def sum_terms(terms: Terms, tol: float = 1e-12, cap: int | None = None) -> SeriesValue:
    """Certified sum of a Terms family (see module docstring)."""
    if terms.n_end is not None:
        return _finite_sum(terms)
    cls = terms.classify()
    if not cls.convergent:
        return SeriesValue(Status.DIVERGENT, INF, INF, INF, INF, witness=cls)
    cap = cap or max_terms()
    acc = _Acc()
    nxt = terms.n_start
    N = max(terms.first_tail() + 1, terms.n_start + 1023, 1023)
    best: SeriesValue | None = None
    prev_w = INF
    while True:
        while nxt <= N:
            hi = min(N, nxt + CHUNK - 1)
            acc.add(*terms.logs_signs(np.arange(nxt, hi + 1)))
            nxt = hi + 1
        if tail_is_convex(terms, N + 0.5):
            sv = _tail_bracket(terms, acc, N, cls)
            if sv is not None:
                best = sv
                w = _rel_width(sv)
                if w <= tol * max(1.0, abs(sv.lo)) or (sv.hi - sv.lo) <= tol:
                    return sv
                # rounding floor reached: more terms no longer tighten the bracket
                if acc.count >= 1 << 20 and w > 0.5 * prev_w:
                    return sv
                prev_w = w
        if N >= cap:
            if best is None:
                return SeriesValue(Status.INDETERMINATE, reason="cap (tail not certified)", witness=cls,
                                   n_terms=acc.count)
            return SeriesValue(Status.INDETERMINATE, best.lo, best.hi, best.log_lo, best.log_hi,
                               witness=cls, reason="cap", n_terms=acc.count)
        N = min(cap, 4 * N + 3)


_TAIL_PAD = 64 * EPS


def _tail_bracket(terms: Terms, acc: _Acc, N: int, cls: BertrandClass) -> SeriesValue | None:
    try:
        log_up, rel_up = tail_log_integral(terms, N + 0.5, cls)
        log_lo_int, rel_lo = tail_log_integral(terms, N + 1.0, cls)
    except (ValueError, DomainError, OverflowError):
        return None
    first_log, sign = terms.logs_signs(np.array([N + 1]))
    tail_hi = log_up + math.log1p(rel_up + _TAIL_PAD)
    lo_int = log_lo_int + math.log(max(1e-300, 1.0 - rel_lo - _TAIL_PAD))
    tail_lo = _log_add(lo_int, float(first_log[0]) - math.log(2.0))
    tail_lo = min(tail_lo, tail_hi)
    m, val, rnd = acc.bounds()
    tail_sign = float(sign[0])
    return _finalize(m, val, rnd, tail_lo, tail_hi, tail_sign, acc.count, cls)


def sum_series(u, e: AsymptoticExpr, tol: float = 1e-12, weight: AsymptoticExpr | None = None,
               n_start: int = 0, n_end: int | None = None, cap: int | None = None) -> SeriesValue:
    """Sum of w(n) e^{u e(n)} over branches n >= n_start."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return sum_terms(Terms(u, e, weight, n_start, n_end), tol=tol, cap=cap)


# ---------------------------------------------------------------------------
# Threshold comparison
# ---------------------------------------------------------------------------

class Comparison(str, Enum):
    BELOW = "Below"
    ABOVE = "Above"
    STRADDLES = "Straddles"


TOL_SCHEDULE = (1e-7, 1e-10, 1e-13)


def compare_sv(sv: SeriesValue, threshold: float) -> Comparison:
    if sv.divergent:
        return Comparison.ABOVE
    if math.isnan(sv.lo):
        return Comparison.STRADDLES
    lt = math.log(threshold) if threshold > 0 else -INF
    if threshold > 0 and math.isfinite(sv.log_hi) and sv.log_hi < lt and sv.hi < threshold:
        return Comparison.BELOW
    if sv.hi < threshold:
        return Comparison.BELOW
    if sv.lo > threshold:
        return Comparison.ABOVE
    return Comparison.STRADDLES


def compare_terms(terms: Terms, threshold: float, cap: int | None = None) -> tuple[Comparison, SeriesValue]:
    sv = None
    for tol in TOL_SCHEDULE:
        sv = sum_terms(terms, tol=tol, cap=cap)
        c = compare_sv(sv, threshold)
        if c is not Comparison.STRADDLES or sv.status is Status.INDETERMINATE:
            return c, sv
    return Comparison.STRADDLES, sv


def compare_to(u, e: AsymptoticExpr, threshold: float, weight: AsymptoticExpr | None = None,
               n_start: int = 0, n_end: int | None = None, cap: int | None = None) -> Comparison:
    """Certified position of sum w e^{u e} relative to ``threshold``, refining precision as needed."""
    return compare_terms(Terms(u, e, weight, n_start, n_end), threshold, cap)[0]
