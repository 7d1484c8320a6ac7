"""Suspension-flow thermodynamics on the induced full shift.

The flow pressure of tg is inf{s : P(t Delta_g - s tau) <= 0}; on the induced system
this is the smallest s at which sum_n exp(t Dbar_n - s taubar_n) <= 1. Recurrence of
tg is read off psi = t Delta_g - P tau: recurrent iff that sum equals one, and then
positive recurrent iff sum taubar_n e^{psibar_n} is finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .inducing import GibbsWeights, MeasureStats, gibbs_weights, project_stats
from .model import ZERO, AsymptoticExpr, FlowSpec, linear_combine, to_fraction
from .pressure import (
    PressureValue,
    RootResult,
    critical_root,
    perron_bracket,
    renewal_base_pressure,
)
from .series import (
    Comparison,
    Interval,
    classify_terms,
    convergence_set,
    parametric_levels,
)

INF = float("inf")


class NoFiniteEntropy(ValueError):
    pass


class RecClass(str, Enum):
    POSITIVE = "PositiveRecurrent"
    NULL = "NullRecurrent"
    TRANSIENT = "Transient"
    INDETERMINATE = "Indeterminate"


class Existence(str, Enum):
    UNIQUE = "UniqueExists"
    NONE = "None"
    TWO = "TwoExist"
    INDETERMINATE = "Indeterminate"


# ---------------------------------------------------------------------------
# s_infinity and the finiteness boundary
# ---------------------------------------------------------------------------

def s_infinity(roof: AsymptoticExpr, finite_alphabet: bool = False) -> Fraction | float:
    """inf{s >= 0 : sum e^{-s taubar_n} < inf}, exactly; +inf if the series never converges."""
    if finite_alphabet:
        return Fraction(0)
    cs = convergence_set(parametric_levels(ZERO, roof.scale(-1)))
    if cs.empty:
        return INF
    if cs.lo == -INF:
        return Fraction(0)
    return max(Fraction(0), Fraction(cs.lo))


def flow_exponents(spec: FlowSpec, t) -> tuple[AsymptoticExpr, AsymptoticExpr]:
    """(t Dbar, -taubar): the family sum exp(A + s B) whose root in s is the flow pressure."""
    t = to_fraction(t)
    return spec.flow_potential.scale(t), spec.roof.scale(-1)


def flow_boundary(spec: FlowSpec, t) -> Interval:
    """Convergence set in s of sum exp(t Dbar - s taubar); its left end is s_inf + t alpha."""
    if spec.finite_alphabet:
        return Interval(-INF, INF)
    A, B = flow_exponents(spec, t)
    return convergence_set(parametric_levels(A, B))


# ---------------------------------------------------------------------------
# Flow pressure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowPressure:
    t: Fraction
    lo: float
    hi: float
    exact: Fraction | None = None
    sticks: bool = False  # pressure equals the finiteness boundary (SticksToBoundary)
    boundary: Fraction | float | None = None
    infinite: bool = False
    indeterminate: bool = False
    boundary_cmp: Comparison | None = None
    note: str = ""

    @property
    def value(self) -> float:
        if self.exact is not None:
            return float(self.exact)
        return 0.5 * (self.lo + self.hi)

    @property
    def err(self) -> float:
        return 0.0 if self.exact is not None else 0.5 * (self.hi - self.lo)

    def as_dict(self) -> dict:
        return {"t": float(self.t), "pressure": self.value, "err": self.err, "lo": self.lo,
                "hi": self.hi, "sticks_to_boundary": self.sticks, "infinite": self.infinite,
                "indeterminate": self.indeterminate,
                "boundary": None if self.boundary is None else float(self.boundary)}


def flow_pressure(spec: FlowSpec, t=0) -> FlowPressure:
    """P_Phi(t g) with a certified bracket (or exact value at the boundary)."""
    t = to_fraction(t)
    if not spec.hopf_ok:
        raise ValueError("suspension flow not well defined (hopf_ok is False)")
    if spec.base.kind == "finite":
        return _finite_flow_pressure(spec, t)
    A, B = flow_exponents(spec, t)
    n_end = None if spec.branch_count is None else spec.branch_count - 1
    res = critical_root(A, B, spec.basis(), n_end=n_end)
    if res.infinite:
        return FlowPressure(t, INF, INF, infinite=True, note="series diverges for every s")
    bnd = res.boundary.lo if res.boundary.lo != -INF else None
    if res.indeterminate:
        return FlowPressure(t, res.lo, res.hi, boundary=bnd, indeterminate=True,
                            boundary_cmp=res.boundary_cmp, note=res.note)
    sticks = res.at_boundary and res.boundary_cmp is Comparison.BELOW
    return FlowPressure(t, res.lo, res.hi, exact=res.exact, sticks=sticks, boundary=bnd,
                        boundary_cmp=res.boundary_cmp, note=res.note)


def _finite_flow_pressure(spec: FlowSpec, t: Fraction) -> FlowPressure:
    m = spec.base.alphabet_size
    A = spec.base.array()
    tau = spec.roof.values(range(m))
    dg = spec.flow_potential.values(range(m))

    def logrho(s):
        W = A * np.exp(float(t) * dg - s * tau)[:, None]
        lo, hi, _ = perron_bracket(W)
        return lo, hi

    lo, hi = -1.0, 1.0
    while logrho(hi)[1] >= 0:
        hi *= 2
    while logrho(lo)[0] <= 0:
        lo *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        a, b = logrho(mid)
        if a > 0:
            lo = mid
        elif b < 0:
            hi = mid
        else:
            break
        if hi - lo < 1e-13 * max(1.0, abs(hi)):
            break
    return FlowPressure(t, lo, hi)


def flow_entropy(spec: FlowSpec) -> FlowPressure:
    return flow_pressure(spec, 0)


# ---------------------------------------------------------------------------
# Recurrence classification
# ---------------------------------------------------------------------------

def _class_over(levels_set: Interval, lo: float, hi: float, exact: Fraction | None) -> bool | None:
    """True if [lo, hi] (or the exact point) lies in the set, False if disjoint, None otherwise."""
    if exact is not None:
        return exact in levels_set
    a, b = Fraction(lo), Fraction(hi)
    ina, inb = a in levels_set, b in levels_set
    if ina and inb:
        return True
    if levels_set.empty:
        return False
    if not ina and not inb:
        # disjoint unless the set sits strictly inside the bracket
        if levels_set.hi < a or levels_set.lo > b or (levels_set.lo == b and not levels_set.lo_closed) \
                or (levels_set.hi == a and not levels_set.hi_closed):
            return False
    return None


@dataclass(frozen=True)
class BaseClassification:
    pressure: PressureValue
    rec_class: RecClass
    stats: MeasureStats | None = None
    note: str = ""


def classify_base(phibar: AsymptoticExpr, basis: Sequence[AsymptoticExpr] = (),
                  return_times: AsymptoticExpr | None = None, taubar: AsymptoticExpr | None = None,
                  n_end: int | None = None, with_stats: bool = True) -> BaseClassification:
    """Recurrence class of a first-coordinate potential given by its induced values."""
    from .model import return_time_expr

    r = return_times or return_time_expr()
    P = renewal_base_pressure(phibar, basis, r, n_end=n_end)
    if P.status == "PlusInfinity":
        return BaseClassification(P, RecClass.INDETERMINATE, note="infinite pressure")
    if P.status == "Indeterminate":
        return BaseClassification(P, RecClass.INDETERMINATE, note=P.note)
    if P.transient:
        cls = RecClass.TRANSIENT
    else:
        if n_end is not None:
            cls = RecClass.POSITIVE
        else:
            # sum r_n e^{phibar_n - p r_n} < inf on which p?
            wset = convergence_set(parametric_levels(phibar, r.scale(-1), weight=r))
            ok = _class_over(wset, P.lo, P.hi, P.exact)
            cls = {True: RecClass.POSITIVE, False: RecClass.NULL, None: RecClass.INDETERMINATE}[ok]
    stats = None
    if with_stats:
        p_mid = P.exact if P.exact is not None else Fraction(P.value)
        w = gibbs_weights(phibar, p_mid, basis, r, n_end)
        stats = project_stats(w, taubar if taubar is not None else r, phibar, r)
    return BaseClassification(P, cls, stats)


@dataclass(frozen=True)
class ClassificationReport:
    t: float
    flow_pressure: FlowPressure
    s_infinity: Fraction | float
    base_pressure: PressureValue | None
    base_class: RecClass
    flow_class: RecClass
    equilibrium: Existence
    mme: Existence | None
    theorem_case: str | None
    stats: MeasureStats | None = None
    blocking: str = ""
    cusp: dict | None = None

    def as_dict(self) -> dict:
        d = {
            "t": self.t,
            "flow_pressure": self.flow_pressure.as_dict(),
            "s_infinity": _num(self.s_infinity),
            "base_pressure": None if self.base_pressure is None else self.base_pressure.as_dict(),
            "base_class": self.base_class.value,
            "flow_class": self.flow_class.value,
            "equilibrium": self.equilibrium.value,
            "mme": None if self.mme is None else self.mme.value,
            "theorem_case": self.theorem_case,
            "stats": None if self.stats is None else self.stats.as_dict(),
            "blocking": self.blocking,
        }
        if self.cusp is not None:
            d["cusp"] = self.cusp
        return d


def _num(x):
    if isinstance(x, Fraction):
        return float(x)
    return x


def _psi(spec: FlowSpec, t: Fraction, P: Fraction) -> AsymptoticExpr:
    return linear_combine(t, spec.flow_potential, -P, spec.roof)


def classify_flow(spec: FlowSpec, t=0, fp: FlowPressure | None = None) -> RecClass:
    return _analyse(spec, to_fraction(t), fp)[0]


def _analyse(spec: FlowSpec, t: Fraction, fp: FlowPressure | None = None, with_stats: bool = True):
    """(flow class, base class of psi, P_sigma(psi), theorem case, stats, blocking note)."""
    fp = fp or flow_pressure(spec, t)
    if fp.infinite:
        return RecClass.INDETERMINATE, RecClass.INDETERMINATE, None, None, None, "infinite flow pressure"
    if fp.indeterminate:
        return RecClass.INDETERMINATE, RecClass.INDETERMINATE, None, None, None, fp.note
    if spec.base.kind == "finite":
        return RecClass.POSITIVE, RecClass.POSITIVE, PressureValue("Finite", 0.0, 0.0, exact=Fraction(0)), \
            "a", None, ""
    A, B = flow_exponents(spec, t)
    r = spec.base.induced_return_expr()
    n_end = None if spec.branch_count is None else spec.branch_count - 1
    P_mid = fp.exact if fp.exact is not None else Fraction(fp.value)
    psi = _psi(spec, t, P_mid)
    if fp.sticks:
        # sum < 1 at the flow pressure: psi transient, case by the sign of P_sigma(psi)
        base_P = renewal_base_pressure(psi, spec.basis(), r, n_end=n_end)
        zero = base_P.exact == 0 if base_P.exact is not None else None
        if zero is None:
            case = None
        else:
            case = "iv" if zero else "i"
        stats = _stats(spec, psi, r, n_end) if with_stats else None
        return RecClass.TRANSIENT, RecClass.TRANSIENT, base_P, case, stats, ""
    # recurrent: the induced sum equals one at P
    base_P = PressureValue("Finite", 0.0, 0.0, exact=Fraction(0), recurrent=True)
    if n_end is not None:
        stats = _stats(spec, psi, r, n_end) if with_stats else None
        return RecClass.POSITIVE, RecClass.POSITIVE, base_P, "a", stats, ""
    tau_set = convergence_set(parametric_levels(A, B, weight=spec.roof))
    r_set = convergence_set(parametric_levels(A, B, weight=r))
    tau_ok = _class_over(tau_set, fp.lo, fp.hi, fp.exact)
    r_ok = _class_over(r_set, fp.lo, fp.hi, fp.exact)
    flow_cls = {True: RecClass.POSITIVE, False: RecClass.NULL, None: RecClass.INDETERMINATE}[tau_ok]
    base_cls = {True: RecClass.POSITIVE, False: RecClass.NULL, None: RecClass.INDETERMINATE}[r_ok]
    blocking = ""
    if tau_ok is None:
        blocking = "sum taubar e^psi straddles its convergence boundary"
    elif r_ok is None:
        blocking = "sum r e^psi straddles its convergence boundary"
    case = None
    if tau_ok is not None and r_ok is not None:
        case = {(True, True): "a", (False, True): "b", (True, False): "ii", (False, False): "iii"}[(r_ok, tau_ok)]
    stats = _stats(spec, psi, r, n_end) if with_stats else None
    return flow_cls, base_cls, base_P, case, stats, blocking


def _stats(spec, psi, r, n_end) -> MeasureStats | None:
    try:
        w = gibbs_weights(psi, 0, spec.basis(), r, n_end)
        return project_stats(w, spec.roof, spec.flow_potential, r)
    except (ValueError, ArithmeticError):
        return None


def equilibrium_decision(spec: FlowSpec, t=0, with_mme: bool = True) -> ClassificationReport:
    """Existence of an equilibrium state for tg, labelled by its existence case (a, b, i-iv)."""
    t = to_fraction(t)
    s_inf = s_infinity(spec.roof, spec.finite_alphabet)
    fp = flow_pressure(spec, t)
    flow_cls, base_cls, base_P, case, stats, blocking = _analyse(spec, t, fp)
    if case in ("a", "b"):
        eq = Existence.UNIQUE
    elif case in ("i", "ii", "iii", "iv"):
        eq = Existence.NONE
    else:
        eq = Existence.INDETERMINATE
    cusp = None
    if spec.cusp_value is not None and not fp.infinite:
        eq, cusp = _cusp_verdict(fp, eq, spec.cusp_value)
    mme = None
    if with_mme:
        if t == 0:
            mme = eq
        else:
            mme = equilibrium_decision(replace(spec, cusp_value=0.0 if spec.cusp_value is not None else None),
                                       0, with_mme=False).equilibrium
    return ClassificationReport(float(t), fp, s_inf, base_P, base_cls, flow_cls, eq, mme, case,
                                stats, blocking, cusp)


def _cusp_verdict(fp: FlowPressure, renewal_eq: Existence, cusp: float) -> tuple[Existence, dict]:
    """Compare the renewal-side pressure with the value carried by the fixed-point measure."""
    lo, hi = (float(fp.exact),) * 2 if fp.exact is not None else (fp.lo, fp.hi)
    info = {"cusp_value": cusp, "renewal_pressure": fp.value, "pressure": max(fp.value, cusp)}
    if lo > cusp:
        info["verdict"] = "renewal side"
        return renewal_eq, info
    if hi < cusp:
        info["verdict"] = "cusp measure unique"
        return Existence.UNIQUE, info
    if fp.exact is not None and Fraction(cusp) == fp.exact:
        info["verdict"] = "tie"
        return (Existence.TWO if renewal_eq is Existence.UNIQUE else Existence.UNIQUE), info
    info["verdict"] = "bracket overlap"
    return Existence.INDETERMINATE, info
