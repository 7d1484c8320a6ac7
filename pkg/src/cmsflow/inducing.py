"""First-return inducing on C_0 of the renewal shift, Gibbs weights, Kac and Abramov projections."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import (
    AsymptoticExpr,
    BasePotential,
    DomainError,
    linear_combine,
    return_time_expr,
    to_fraction,
)
from .pressure import solve_normalized
from .series import SeriesValue, Status, Terms, sum_terms

INF = float("inf")


@dataclass(frozen=True)
class InducedPotential:
    expr: AsymptoticExpr
    certified: bool  # False when the closed form is a fit to tabulated values
    table_len: int = 0


def induce_potential(phi: BasePotential, cap: int = 10_000) -> InducedPotential:
    """phibar_n = phi(0) + phi(1) + ... + phi(n) as an AsymptoticExpr.

    Telescoping inputs give an exact closed form; tabulated inputs are summed up to
    ``cap`` and continued by a least-squares fit of c0 + lin n + c1 log(n+1), flagged
    uncertified.
    """
    if phi.telescoping:
        return InducedPotential(_telescoped(phi), True)
    vals = np.asarray(phi.values, dtype=float)[: cap + 1]
    if len(phi.head) > 0:
        k = min(len(phi.head), len(vals))
        vals[:k] = phi.head[:k]
    cum = np.cumsum(vals)
    n = np.arange(len(cum), dtype=float)
    half = len(cum) // 2
    X = np.column_stack([np.ones(len(cum) - half), n[half:], np.log(n[half:] + 1)])
    coef, *_ = np.linalg.lstsq(X, cum[half:], rcond=None)
    ov = {int(i): Fraction(float(c)) for i, c in enumerate(cum)}
    e = AsymptoticExpr(c0=Fraction(float(coef[0])), lin=Fraction(float(coef[1])),
                       c1=Fraction(float(coef[2])), overrides=ov, n_min=len(cum))
    return InducedPotential(e, False, len(cum))


def _telescoped(phi: BasePotential) -> AsymptoticExpr:
    H = len(phi.head)
    c = phi.const
    F = phi.antiderivative
    head_sums = [Fraction(x) for x in np.cumsum(phi.head)] if H else []
    S_H = head_sums[-1] if H else Fraction(0)
    if F is None:
        # constant beyond the head
        return AsymptoticExpr(c0=S_H + c * (1 - H), lin=c,
                              overrides={n: head_sums[n] for n in range(H)})
    if H == 0:
        F_prev = F.exact(-1) if -1 in F.override_map else Fraction(F.closed(-1))
    else:
        F_prev = F.exact(H - 1)
    base = AsymptoticExpr(c0=S_H + c * (1 - H) - F_prev, lin=c)
    out = linear_combine(1, base, 1, F)
    ov = {n: head_sums[n] for n in range(H)}
    for n, v in F.overrides:
        if n >= H:
            ov[n] = S_H + c * (n - H + 1) + v - F_prev
    keep = {n: v for n, v in out.override_map.items() if n >= H}
    keep.update(ov)
    return AsymptoticExpr(c0=out.c0, lin=out.lin, c1=out.c1, c2=out.c2, c3=out.c3,
                          s1=out.s1, s2=out.s2, s3=out.s3, overrides=keep,
                          n_min=max(H, F.n_min))


def induced_values_direct(phi: BasePotential, n_max: int) -> np.ndarray:
    """phibar_n by literal summation of the base values, n = 0..n_max."""
    return np.cumsum(phi.table(n_max))


# ---------------------------------------------------------------------------
# Gibbs weights and measure statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GibbsWeights:
    """p_n = exp(phibar_n - P r_n) on the induced alphabet."""

    log_p: AsymptoticExpr
    pressure: Fraction
    normalization: SeriesValue
    exact_one: bool = False
    n_end: int | None = None

    @property
    def norm_value(self) -> float:
        return 1.0 if self.exact_one else self.normalization.mid

    def weights(self, n: int) -> np.ndarray:
        return np.exp(self.log_p.values(np.arange(n)))


def gibbs_weights(phibar: AsymptoticExpr, P, basis: Sequence[AsymptoticExpr] = (),
                  return_times: AsymptoticExpr | None = None, n_end: int | None = None) -> GibbsWeights:
    if P is None or (isinstance(P, float) and not math.isfinite(P)):
        raise ValueError("finite pressure required")
    P = to_fraction(P)
    r = return_times or return_time_expr()
    log_p = linear_combine(1, phibar, -P, r)
    exact = solve_normalized(log_p, r, basis) == 0 if basis else False
    sv = sum_terms(Terms(1, log_p, None, 0, n_end))
    return GibbsWeights(log_p, P, sv, exact, n_end)


@dataclass(frozen=True)
class MeasureStats:
    entropy: float
    integral_r: float
    integral_tau: float
    integral_phi: float
    finite_base_measure: bool
    base_entropy: float = math.nan
    flow_entropy: float = math.nan
    err: float = 0.0

    def as_dict(self) -> dict:
        return {k: _plain(getattr(self, k)) for k in ("entropy", "integral_r", "integral_tau", "integral_phi",
                                               "finite_base_measure", "base_entropy", "flow_entropy")}


def _plain(x):
    return x if isinstance(x, bool) else float(x)


def weighted_mean(w: GibbsWeights, weight: AsymptoticExpr) -> tuple[float, float]:
    """Bracket of sum_n weight(n) p_n (unnormalised); +-inf when divergent."""
    lvl, c = weight.leading()
    sign = 1.0 if (c > 0 if lvl >= 0 else weight.c0 >= 0) else -1.0
    if weight.is_zero():
        return 0.0, 0.0
    sv = sum_terms(Terms(1, w.log_p, weight, 0, w.n_end))
    if sv.divergent:
        return (sign * INF, sign * INF)
    if sv.status is Status.INDETERMINATE and math.isnan(sv.lo):
        return (-INF, INF)
    return sv.lo, sv.hi


def project_stats(w: GibbsWeights, taubar: AsymptoticExpr, phibar: AsymptoticExpr | None = None,
                  return_times: AsymptoticExpr | None = None) -> MeasureStats:
    """Entropy and integrals of the normalised Gibbs vector, projected via Kac and Abramov."""
    Z = w.norm_value
    r = return_times or return_time_expr()
    ent_lo, ent_hi = weighted_mean(w, w.log_p.scale(-1))
    r_lo, r_hi = weighted_mean(w, r)
    t_lo, t_hi = weighted_mean(w, taubar)
    f_lo, f_hi = weighted_mean(w, phibar) if phibar is not None else (math.nan, math.nan)

    def mid(a, b):
        return 0.5 * (a + b) if math.isfinite(a) and math.isfinite(b) else a

    entropy = mid(ent_lo, ent_hi) / Z + math.log(Z)
    ir = mid(r_lo, r_hi) / Z
    it = mid(t_lo, t_hi) / Z
    ip = mid(f_lo, f_hi) / Z
    err = max(ent_hi - ent_lo if math.isfinite(ent_lo) else 0.0,
              r_hi - r_lo if math.isfinite(r_lo) else 0.0,
              t_hi - t_lo if math.isfinite(t_lo) else 0.0)
    finite_r = math.isfinite(ir)
    base_h = entropy / ir if finite_r and math.isfinite(entropy) else math.nan
    flow_h = entropy / it if math.isfinite(it) and math.isfinite(entropy) else math.nan
    return MeasureStats(entropy, ir, it, ip, finite_r, base_h, flow_h, err)


def kac_integral(p: Sequence[float], phibar: Sequence[float], r: Sequence[float]) -> float:
    """Base integral of phi for the measure projected from a finite induced vector p."""
    p, phibar, r = map(np.asarray, (p, phibar, r))
    return float(np.dot(p, phibar) / np.dot(p, r))


def base_measure_integral(p: Sequence[float], phi_table: Sequence[float]) -> float:
    """Integral of a first-coordinate phi against the projection of p, by direct orbit counting.

    Branch n spends one step in each of the states n, n-1, ..., 1, 0 before returning, so
    the (unnormalised) projected mass of state j is sum_{n >= j} p_n.
    """
    p = np.asarray(p, dtype=float)
    mass = np.cumsum(p[::-1])[::-1]  # mass of state j: branches n >= j pass through j
    total = float(np.dot(p, np.arange(1, len(p) + 1)))
    return float(np.dot(mass, np.asarray(phi_table, dtype=float)[: len(p)]) / total)
