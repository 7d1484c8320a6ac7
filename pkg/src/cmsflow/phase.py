"""Phase transitions of t -> P_Phi(tg).

The pressure is bounded below by the affine line s_inf + t alpha and sticks to it exactly
on I = {t : sum_n exp(t Dbar_n - (s_inf + t alpha) taubar_n) <= 1}. Outside I it is the
implicit root of the induced series and varies analytically. Because the boundary
series is log-convex in t, I is an interval; its endpoints are found by certified
bisection on the sign of (series - 1).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from scipy.optimize import minimize_scalar

from .flow import (
    FlowPressure,
    NoFiniteEntropy,
    RecClass,
    _analyse,
    flow_pressure,
    s_infinity,
)
from .model import AsymptoticExpr, FlowSpec, linear_combine, to_fraction
from .series import (
    Comparison,
    Interval,
    Terms,
    compare_terms,
    convergence_set,
    parametric_levels,
    sum_terms,
)

INF = float("inf")
SEARCH_SPAN = 1e4  # how far out an unbounded end of I is chased


class NoLimit(ValueError):
    """Dbar / taubar has no finite limit."""


class Regime(str, Enum):
    AFFINE = "Affine"
    ANALYTIC = "Analytic"
    INDETERMINATE = "Indeterminate"


# ---------------------------------------------------------------------------
# alpha
# ---------------------------------------------------------------------------

# growth order of each level: lin beats log beats loglog beats logloglog beats const
_ORDER = {0: 4, 1: 3, 2: 2, 3: 1, -1: 0}


def _lead_coef(e: AsymptoticExpr, level: int) -> Fraction:
    return e.c0 if level == -1 else e.coeffs[level]


def alpha_limit(spec: FlowSpec) -> Fraction:
    """lim Dbar_n / taubar_n as an exact rational."""
    if spec.finite_alphabet:
        raise NoLimit("finite alphabet: no asymptotic ratio")
    rl, rc = spec.roof.leading()
    dl, _ = spec.flow_potential.leading()
    if spec.flow_potential.is_zero():
        return Fraction(0)
    if _ORDER[dl] > _ORDER[rl]:
        raise NoLimit("flow potential grows faster than the roof")
    if _ORDER[dl] < _ORDER[rl]:
        return Fraction(0)
    return _lead_coef(spec.flow_potential, rl) / _lead_coef(spec.roof, rl)


# ---------------------------------------------------------------------------
# The interval I
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Endpoint:
    lo: float
    hi: float
    exact: Fraction | None = None
    steps: int = 0
    certified: bool = True

    @property
    def value(self) -> float:
        return float(self.exact) if self.exact is not None else 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return 0.0 if self.exact is not None else self.hi - self.lo

    def as_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "value": self.value, "width": self.width,
                "certified": self.certified}


@dataclass(frozen=True)
class PhaseInterval:
    kind: str  # "Empty", "Interval", "AllReals"
    lower: Endpoint | None = None  # None: unbounded below
    upper: Endpoint | None = None

    def contains_certified(self, t: float) -> bool:
        if self.kind == "AllReals":
            return True
        if self.kind == "Empty":
            return False
        return (self.lower is None or t > self.lower.hi) and (self.upper is None or t < self.upper.lo)

    def excludes_certified(self, t: float) -> bool:
        if self.kind == "AllReals":
            return False
        if self.kind == "Empty":
            return True
        return (self.lower is not None and t < self.lower.lo) or (self.upper is not None and t > self.upper.hi)

    def as_dict(self) -> dict:
        return {"kind": self.kind,
                "lower": None if self.lower is None else self.lower.as_dict(),
                "upper": None if self.upper is None else self.upper.as_dict()}


def boundary_exponents(spec: FlowSpec) -> tuple[AsymptoticExpr, AsymptoticExpr, Fraction, Fraction]:
    """(A0, A1, s_inf, alpha) with the boundary series sum exp(A0 + t A1)."""
    s_inf = s_infinity(spec.roof, spec.finite_alphabet)
    if s_inf == INF:
        raise NoFiniteEntropy("s_infinity is infinite")
    alpha = alpha_limit(spec)
    A0 = spec.roof.scale(-s_inf)
    A1 = linear_combine(1, spec.flow_potential, -alpha, spec.roof)
    return A0, A1, s_inf, alpha


class _Boundary:
    """Certified comparisons of the boundary series with 1 along t."""

    def __init__(self, spec: FlowSpec):
        self.A0, self.A1, self.s_inf, self.alpha = boundary_exponents(spec)
        self.conv = convergence_set(parametric_levels(self.A0, self.A1))

    def expr(self, t) -> AsymptoticExpr:
        return linear_combine(1, self.A0, to_fraction(t), self.A1)

    def cmp(self, t) -> Comparison:
        t = to_fraction(t)
        if t not in self.conv:
            return Comparison.ABOVE
        return compare_terms(Terms(1, self.expr(t)), 1.0)[0]

    def log_sum(self, t: float) -> float:
        if to_fraction(t) not in self.conv:
            return INF
        sv = sum_terms(Terms(1, self.expr(t)), tol=1e-8)
        return sv.log_hi if math.isfinite(sv.log_hi) else INF


def _bisect(B: _Boundary, inside: float, outside: float, width: float, max_steps: int) -> Endpoint:
    """Shrink [inside, outside] (either order) around the crossing of the series through 1."""
    steps = 0
    certified = True
    while abs(outside - inside) > width and steps < max_steps:
        mid = 0.5 * (inside + outside)
        c = B.cmp(mid)
        steps += 1
        if c is Comparison.BELOW:
            inside = mid
        elif c is Comparison.ABOVE:
            outside = mid
        else:
            certified = False
            break
    lo, hi = sorted((inside, outside))
    return Endpoint(lo, hi, steps=steps, certified=certified)


def interval_I(spec: FlowSpec, width: float = 1e-6, max_steps: int = 60) -> PhaseInterval:
    """Certified description of the set where the pressure equals s_inf + t alpha."""
    B = _Boundary(spec)
    if B.conv.empty:
        return PhaseInterval("Empty")
    if B.A1.is_zero():
        c = B.cmp(0)
        if c is Comparison.STRADDLES:
            raise ArithmeticError("boundary series straddles 1 and does not depend on t")
        return PhaseInterval("AllReals" if c is Comparison.BELOW else "Empty")

    lo_lim = max(float(B.conv.lo), -SEARCH_SPAN)
    hi_lim = min(float(B.conv.hi), SEARCH_SPAN)
    t_star = _find_inside(B, lo_lim, hi_lim)
    if t_star is None:
        return PhaseInterval("Empty")

    def side(limit_set_end, closed, direction):
        # direction -1 chases the lower end, +1 the upper end
        if math.isfinite(limit_set_end):
            if closed and B.cmp(limit_set_end) is Comparison.BELOW:
                e = to_fraction(limit_set_end)
                return Endpoint(float(e), float(e), exact=e)
            return _bisect(B, t_star, float(limit_set_end), width, max_steps)
        step = 1.0
        while step <= SEARCH_SPAN:
            probe = t_star + direction * step
            if B.cmp(probe) is not Comparison.BELOW:
                return _bisect(B, t_star, probe, width, max_steps)
            step *= 2
        return None

    lower = side(float(B.conv.lo), B.conv.lo_closed, -1)
    upper = side(float(B.conv.hi), B.conv.hi_closed, +1)
    if lower is None and upper is None:
        return PhaseInterval("AllReals")
    return PhaseInterval("Interval", lower, upper)


def _find_inside(B: _Boundary, lo: float, hi: float) -> float | None:
    """A t with the boundary series certified below 1, or None if its minimum is above 1."""
    def f(t):
        v = B.log_sum(t)
        return v if math.isfinite(v) else 1e6

    a = lo + 1e-9 * max(1.0, abs(lo))
    b = hi - 1e-9 * max(1.0, abs(hi))
    if a >= b:
        candidates = [0.5 * (lo + hi)]
    else:
        res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-6})
        candidates = [float(res.x), a, b]
    for t in candidates:
        c = B.cmp(t)
        if c is Comparison.BELOW:
            return t
    t = candidates[0]
    if B.cmp(t) is Comparison.ABOVE:
        return None
    raise ArithmeticError(f"boundary series straddles 1 at its minimum t = {t:.6g}")


# ---------------------------------------------------------------------------
# Scanning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseSample:
    t: float
    pressure: float
    err: float
    regime: Regime
    flow_class: RecClass
    affine_value: float

    def row(self) -> list:
        return [self.t, self.pressure, self.err, self.regime.value, self.flow_class.value]


@dataclass(frozen=True)
class PhaseReport:
    s_infinity: Fraction
    alpha: Fraction
    interval: PhaseInterval
    samples: list[PhaseSample] = field(default_factory=list)

    @property
    def transition_points(self) -> list[Endpoint]:
        if self.interval.kind != "Interval":
            return []
        return [e for e in (self.interval.lower, self.interval.upper) if e is not None]

    def as_dict(self) -> dict:
        return {
            "s_infinity": float(self.s_infinity),
            "alpha": float(self.alpha),
            "interval": self.interval.as_dict(),
            "transition_points": [e.as_dict() for e in self.transition_points],
            "samples": [{"t": s.t, "pressure": s.pressure, "err": s.err, "regime": s.regime.value,
                         "flow_class": s.flow_class.value} for s in self.samples],
        }


def sample(spec: FlowSpec, t: float, interval: PhaseInterval, s_inf: Fraction, alpha: Fraction) -> PhaseSample:
    tf = to_fraction(t)
    affine = float(s_inf + tf * alpha)
    fp = flow_pressure(spec, tf)
    if fp.infinite or fp.indeterminate:
        return PhaseSample(float(t), fp.value, fp.err, Regime.INDETERMINATE, RecClass.INDETERMINATE, affine)
    flow_cls = _analyse(spec, tf, fp, with_stats=False)[0]
    on_line = fp.exact is not None and fp.boundary is not None and fp.exact == fp.boundary
    if interval.contains_certified(float(t)) and (fp.sticks or on_line):
        regime = Regime.AFFINE
    elif interval.excludes_certified(float(t)) and fp.lo > affine:
        regime = Regime.ANALYTIC
    else:
        regime = Regime.INDETERMINATE
    return PhaseSample(float(t), fp.value, fp.err, regime, flow_cls, affine)


def _sample_star(args):
    return sample(*args)


def scan(spec: FlowSpec, t_grid: Iterable[float], workers: int = 1,
         interval: PhaseInterval | None = None) -> PhaseReport:
    """Flow pressure on a grid of t with regime tags; samples sorted by t."""
    A0, A1, s_inf, alpha = boundary_exponents(spec)
    interval = interval or interval_I(spec)
    grid = sorted(set(float(t) for t in t_grid))
    jobs = [(spec, t, interval, s_inf, alpha) for t in grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            samples = list(ex.map(_sample_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        samples = [sample(*j) for j in jobs]
    return PhaseReport(s_inf, alpha, interval, samples)


def pressure_curve(spec: FlowSpec, t_grid: Sequence[float]) -> list[FlowPressure]:
    """Plain flow pressures on a grid, no regime analysis (works for any finite-entropy spec)."""
    return [flow_pressure(spec, t) for t in t_grid]


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def to_csv(report: PhaseReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "pressure", "pressure_err", "regime", "flow_class"])
    for s in report.samples:
        w.writerow([fmt(v) for v in s.row()])
    return buf.getvalue()
