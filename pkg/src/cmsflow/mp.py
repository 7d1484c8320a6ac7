"""Manneville-Pomeau flow: the map, its first-return scheme on [1/2, 1), and bracketed
thermodynamics of the suspension with roof log|f'|.

Branch a >= 1 of the induced map returns after a steps. It is the cylinder
[(1 + z_{a-1})/2, (1 + z_{a-2})/2) with z_{-1} = 1, z_0 = 1/2 and z_k the left preimage
of z_{k-1}. On branch a the induced roof, written in terms of the image point y, is
    G_a(y) = log 2 + sum_{i=1}^{a-1} log f'(zeta_i(y)),   zeta_i = (left inverse)^i,
which is increasing in y. Evaluating at y = 1/2 and y = 1 brackets it on the cylinder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .model import AsymptoticExpr, to_fraction
from .pressure import perron_bracket

LOG2 = math.log(2.0)
RESIDUAL_TOL = 1e-14


class ConvergenceFailure(RuntimeError):
    def __init__(self, k: int, detail: str = ""):
        super().__init__(f"preimage iteration stalled at step {k}" + (f": {detail}" if detail else ""))
        self.k = k


def mp_map(x, alpha: float):
    x = np.asarray(x, dtype=float)
    out = np.where(x < 0.5, x * (1.0 + 2.0**alpha * np.abs(x) ** alpha), 2.0 * x - 1.0)
    return float(out) if out.ndim == 0 else out


def mp_deriv(x, alpha: float, left: bool = False):
    """f'(x); ``left=True`` takes the left-branch formula at x = 1/2 (the one-sided limit)."""
    x = np.asarray(x, dtype=float)
    on_left = (x <= 0.5) if left else (x < 0.5)
    out = np.where(on_left, 1.0 + 2.0**alpha * (1.0 + alpha) * np.abs(x) ** alpha, 2.0)
    return float(out) if out.ndim == 0 else out


def left_inverse(y: np.ndarray, alpha: float, k: int = 0) -> np.ndarray:
    """Solve x (1 + 2^a x^a) = y for x in (0, y], vectorised Newton with bisection fallback."""
    c = 2.0**alpha
    y = np.asarray(y, dtype=float)
    lo = np.zeros_like(y)
    hi = y.copy()
    x = y / (1.0 + c * y**alpha)
    for _ in range(200):
        fx = x * (1.0 + c * x**alpha) - y
        hi = np.where(fx > 0, np.minimum(hi, x), hi)
        lo = np.where(fx <= 0, np.maximum(lo, x), lo)
        xn = x - fx / (1.0 + c * (1.0 + alpha) * x**alpha)
        bad = ~((xn > lo) & (xn < hi))
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        done = np.all(np.abs(xn - x) <= 4e-16 * np.maximum(x, 1e-300))
        x = xn
        if done:
            break
    x = np.minimum(x, 0.5)  # left-branch domain; Newton can overshoot 1/2 by an ulp at y = 1
    resid = np.abs(x * (1.0 + c * x**alpha) - y)
    if np.any(resid > RESIDUAL_TOL) or np.any(x <= 0) or np.any(x > y):
        raise ConvergenceFailure(k, f"residual {float(resid.max()):.3g}")
    return x


# ---------------------------------------------------------------------------
# Branch data
# ---------------------------------------------------------------------------

@dataclass
class MpBranchData:
    alpha: float
    n: np.ndarray  # return times 1..N
    left: np.ndarray
    right: np.ndarray
    tau_lo: np.ndarray
    tau_hi: np.ndarray
    # G[a-1, k] = roof of branch a at image point grid[k]
    grid: np.ndarray = field(repr=False, default=None)
    G: np.ndarray = field(repr=False, default=None)
    inc: np.ndarray = field(repr=False, default=None)  # i * log f'(z_i), i = 1..N-1
    z: np.ndarray = field(repr=False, default=None)  # z[k+1] = z_k, k = -1..N

    @property
    def n_max(self) -> int:
        return int(self.n[-1])

    @property
    def cyl_len(self) -> np.ndarray:
        # from the chain directly; right - left loses digits once z_k is tiny
        return 0.5 * (self.z[self.n - 1] - self.z[self.n])

    def csv_rows(self):
        for a, lo, hi, ln in zip(self.n, self.tau_lo, self.tau_hi, self.cyl_len):
            yield int(a), float(lo), float(hi), float(ln)


def _chain_sums(y: np.ndarray, alpha: float, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative sums of log f' along zeta_1(y), ..., zeta_depth(y); also the zeta_depth values."""
    out = np.zeros((depth + 1, len(y)))
    cur = y.copy()
    acc = np.zeros(len(y))
    c1 = 2.0**alpha * (1.0 + alpha)
    zs = np.empty((depth + 1, len(y)))
    zs[0] = y
    for i in range(1, depth + 1):
        cur = left_inverse(cur, alpha, i)
        zs[i] = cur
        acc = acc + np.log1p(c1 * cur**alpha)
        out[i] = acc
    return out, zs


def default_cells(n_max: int) -> int:
    return int(min(n_max - 1, 48))


def build_branches(alpha: float, n_max: int, cells: int | None = None) -> MpBranchData:
    """First-return branches 1..n_max with roof brackets and the sums needed for lumping."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    B = cells if cells is not None else default_cells(n_max)
    B = max(1, min(B, n_max - 1))
    # the chain from y = 1/2 gives z_1, z_2, ...
    _, zs = _chain_sums(np.array([0.5]), alpha, n_max)
    z = np.concatenate([[1.0], zs[:, 0]])  # z[k+1] = z_k, k >= -1
    a = np.arange(1, n_max + 1)
    left = 0.5 * (1.0 + z[a])  # (1 + z_{a-1}) / 2
    right = 0.5 * (1.0 + z[a - 1])
    # cell endpoints: cylinder ends of branches 1..B plus 1/2 and 1
    grid = np.unique(np.concatenate([[0.5, 1.0], left[:B]]))
    sums, _ = _chain_sums(grid, alpha, n_max - 1)
    G = LOG2 + sums  # row a-1 holds branch a
    if np.any(np.diff(G, axis=1) < -1e-12):
        raise ConvergenceFailure(n_max, "roof not monotone in the image point")
    k_half, k_one = 0, len(grid) - 1
    # y = 1: zeta_1(1) = 1/2 sits on the branch boundary; use the left-branch limit 2 + alpha
    G[:, k_one] = LOG2 + np.concatenate([[0.0], np.cumsum(
        np.log(mp_deriv(z[1:n_max], alpha, left=True)))])
    tau_lo = G[:, k_half].copy()
    tau_hi = G[:, k_one].copy()
    i = np.arange(1, n_max)
    inc = i * np.log(mp_deriv(z[2:n_max + 1], alpha))
    return MpBranchData(alpha, a, left, right, tau_lo, tau_hi, grid, G, inc, z)


def roof_at(data: MpBranchData, a: int, x: np.ndarray) -> np.ndarray:
    """log |(f^a)'(x)| by iterating the map (used to audit the brackets)."""
    x = np.asarray(x, dtype=float)
    acc = np.zeros_like(x)
    for _ in range(a):
        acc += np.log(mp_deriv(x, data.alpha))
        x = mp_map(x, data.alpha)
    return acc


# ---------------------------------------------------------------------------
# Fits: s_infinity and decay exponents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitBracket:
    lo: float
    hi: float
    estimate: float
    diagnostics: dict

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def as_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "estimate": self.estimate, "width": self.width,
                "diagnostics": self.diagnostics}


def window_slope(y: np.ndarray, n: np.ndarray, a: int, b: int) -> float:
    """Slope of y against log n between branches a and b."""
    return float((y[b - 1] - y[a - 1]) / (math.log(n[b - 1]) - math.log(n[a - 1])))


def mp_s_infinity(data: MpBranchData) -> FitBracket:
    """Bracket on s_inf = 1/kappa where taubar_n ~ kappa log n, from two windowed slopes per roof bound."""
    N = data.n_max
    if N < 100:
        raise ValueError("need at least 100 branches to fit the roof growth")
    a, b, c = N // 100, N // 10, N
    kappas = []
    diag = {}
    for name, y in (("lo", data.tau_lo), ("hi", data.tau_hi)):
        k_prev = window_slope(y, data.n, a, b)
        k_last = window_slope(y, data.n, b, c)
        d = abs(k_last - k_prev)
        kappas += [k_last - 2 * d, k_last + 2 * d]
        diag[name] = {"slope_first": k_prev, "slope_last": k_last}
    k_lo, k_hi = min(kappas), max(kappas)
    est = 0.5 * (diag["lo"]["slope_last"] + diag["hi"]["slope_last"])
    diag["fitted"] = True
    return FitBracket(1.0 / k_hi, 1.0 / k_lo if k_lo > 0 else math.inf, 1.0 / est, diag)


def roof_slope(data: MpBranchData, a: int = 100, b: int | None = None) -> float:
    """Least-squares slope of the mid roof against log n over [a, b]."""
    b = b or data.n_max
    n = data.n[a - 1:b]
    mid = 0.5 * (data.tau_lo + data.tau_hi)[a - 1:b]
    return float(np.polyfit(np.log(n), mid, 1)[0])


def decay_exponent(data: MpBranchData, a: int = 100, b: int | None = None) -> float:
    """gamma with cylinder length ~ n^(-gamma), by least squares on the log-log plot."""
    b = b or data.n_max
    n = data.n[a - 1:b]
    return float(-np.polyfit(np.log(n), np.log(data.cyl_len[a - 1:b]), 1)[0])


# ---------------------------------------------------------------------------
# Entropy bracket
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EntropyBracket:
    lo: float
    hi: float
    method: str
    cells: int
    tail_kappa: float
    fitted_tail: bool = True

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def as_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "width": self.width, "method": self.method,
                "cells": self.cells, "tail_kappa": self.tail_kappa, "fitted_tail": self.fitted_tail}


def tail_kappa(data: MpBranchData) -> float:
    """Lower estimate for i log f'(z_i) beyond the last branch: window minimum less twice its drift."""
    inc = data.inc
    w = inc[len(inc) // 2:]
    return float(w.min() - 2.0 * abs(inc[-1] - inc[len(inc) // 2]))


def _tail_factor(N: int, s: float, kappa: float) -> float:
    """Upper bound on sum_{a > N} (N/a)^{s kappa}."""
    p = s * kappa
    return math.inf if p <= 1.0 else N / (p - 1.0)


def _lumped(data: MpBranchData, s: float, upper: bool, weights: np.ndarray | None, kappa: float,
            tail_weight: float) -> np.ndarray:
    """Cell-to-cell transfer matrix dominating (upper) or dominated by (lower) the operator."""
    grid, G = data.grid, data.G
    B = len(grid) - 2  # cylinders 1..B are individual cells; the rest is lumped in R
    # cells, ordered by decreasing y: J_1 = [3/4, 1), ..., J_B, R = [1/2, left_B)
    ends = grid[::-1]  # 1, left_1, ..., left_B, 1/2
    k_of = {float(v): i for i, v in enumerate(grid)}
    cols_l = [k_of[float(ends[j + 1])] for j in range(B + 1)]
    cols_r = [k_of[float(ends[j])] for j in range(B + 1)]
    Gsel = G[:, cols_l] if upper else G[:, cols_r]
    E = np.exp(-s * Gsel)
    if weights is not None:
        E = E * weights[:, None]
    M = np.empty((B + 1, B + 1))
    M[:, :B] = E[:B].T
    M[:, B] = E[B:].sum(axis=0)
    if upper:
        M[:, B] += np.exp(-s * Gsel[-1]) * tail_weight * _tail_factor(data.n_max, s, kappa)
    return M


def _log_rho(M: np.ndarray, upper: bool) -> float:
    if not np.all(np.isfinite(M)):
        return math.inf
    lo, hi, _ = perron_bracket(M, width=1e-10)
    return hi if upper else lo


def _root(f, a: float, b: float) -> float:
    while f(a) <= 0:
        a *= 0.5
        if a < 1e-6:
            raise ArithmeticError("no sign change at small s")
    while f(b) >= 0:
        b *= 2
        if b > 1e6:
            raise ArithmeticError("no sign change at large s")
    return brentq(lambda s: min(f(s), 1e3), a, b, xtol=1e-12)


def mp_flow_entropy(data: MpBranchData, method: str = "lumped", shift: float = 0.0,
                    weights: np.ndarray | None = None, tail_weight: float = 1.0) -> EntropyBracket:
    """Bracket on the root s of P(w - (s + shift) taubar) = 0 over the first-return branches.

    ``method="naive"`` uses the per-branch roof brackets alone (a locally constant roof
    at its extremes); ``"lumped"`` uses the cell transfer matrices, which also see how the
    roof varies inside each cylinder and give much narrower brackets.
    """
    kappa = tail_kappa(data)
    if method == "naive":
        w = np.ones(data.n_max) if weights is None else weights

        def f(s, roof, tail):
            terms = w * np.exp(-s * roof)
            total = terms.sum()
            if tail:
                total += terms[-1] * tail_weight * _tail_factor(data.n_max, s, kappa)
            return math.log(total) if total > 0 else -math.inf

        lo = _root(lambda s: f(s, data.tau_hi, False), 0.5, 2.0)
        hi = _root(lambda s: f(s, data.tau_lo, True), 0.5, 2.0)
        return EntropyBracket(lo - shift, hi - shift, "naive", 0, kappa)
    if method != "lumped":
        raise ValueError(f"unknown method {method!r}")
    lo = _root(lambda s: _log_rho(_lumped(data, s, False, weights, kappa, tail_weight), False), 0.5, 2.0)
    hi = _root(lambda s: _log_rho(_lumped(data, s, True, weights, kappa, tail_weight), True), 0.5, 2.0)
    return EntropyBracket(lo - shift, hi - shift, "lumped", len(data.grid) - 1, kappa)


# ---------------------------------------------------------------------------
# Equilibrium decision with the fixed-point measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MpReport:
    alpha: float
    entropy: EntropyBracket
    s_infinity: FitBracket
    renewal_pressure: tuple[float, float]
    renewal_exact: Fraction | None
    cusp_value: float
    pressure: float
    base_class: str
    theorem_case: str
    verdict: str
    equilibrium: str
    gamma: float
    gamma_fit: float

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "entropy": self.entropy.as_dict(),
            "s_infinity": self.s_infinity.as_dict(),
            "renewal_pressure": {"lo": self.renewal_pressure[0], "hi": self.renewal_pressure[1],
                                 "exact": None if self.renewal_exact is None else float(self.renewal_exact)},
            "cusp_value": self.cusp_value,
            "pressure": self.pressure,
            "base_class": self.base_class,
            "theorem_case": self.theorem_case,
            "verdict": self.verdict,
            "equilibrium": self.equilibrium,
            "gamma": self.gamma,
            "gamma_fit": self.gamma_fit,
        }


def mp_equilibrium(alpha: float, n_max: int = 10_000, scale=0, delta: AsymptoticExpr | None = None,
                   cusp_value: float | None = None, data: MpBranchData | None = None) -> MpReport:
    """Equilibrium verdict for g with Delta_g = scale * log|f'| (or a given branch expression).

    The renewal-side pressure P^r solves P(Delta_g - s log|f'|) = 0. The fixed point carries
    the Dirac measure whose free energy is ``cusp_value`` (the value of g there); the flow
    pressure is max(P^r, cusp_value).
    """
    data = data or build_branches(alpha, n_max)
    h = mp_flow_entropy(data)
    s_inf = mp_s_infinity(data) if data.n_max >= 100 else FitBracket(math.nan, math.nan, math.nan, {})
    alpha_q = to_fraction(alpha)
    gamma = 1 + 1 / alpha_q  # cylinder length exponent: |cyl_a| ~ a^(-gamma)
    gamma_fit = decay_exponent(data, min(100, data.n_max // 2))
    if cusp_value is None:
        cusp_value = 0.0
    if delta is None:
        C = to_fraction(scale)
        # Delta_g = C tau: psi = -tau, and P^r = C + h with h = 1
        lo, hi = float(C) + h.lo, float(C) + h.hi
        exact = C + 1
        base_pr = gamma > 2
        case = "a" if base_pr else "b"
    else:
        w = np.exp(delta.values(data.n - 1))
        b = mp_flow_entropy(data, weights=w, tail_weight=float(np.exp(max(0.0, delta.values([data.n_max - 1])[0]))))
        lo, hi = b.lo, b.hi
        exact = None
        base_pr = None
        case = "undetermined"
    if exact is not None and not (lo - 1e-9 <= float(exact) <= hi + 1e-9):
        raise ArithmeticError("numerical bracket excludes the exact renewal pressure")
    renewal_eq = case in ("a", "b")
    cusp_q = to_fraction(cusp_value)
    if exact is not None and exact == cusp_q:
        verdict, eq = "tie", ("TwoExist" if renewal_eq else "UniqueExists")
    elif (exact is not None and exact > cusp_q) or lo > cusp_value:
        verdict = "renewal side"
        eq = "UniqueExists" if renewal_eq else ("Indeterminate" if case == "undetermined" else "None")
    elif (exact is not None and exact < cusp_q) or hi < cusp_value:
        verdict, eq = "cusp measure unique", "UniqueExists"
    else:
        verdict, eq = "bracket overlap", "Indeterminate"
    p_r = float(exact) if exact is not None else 0.5 * (lo + hi)
    base_class = {True: "PositiveRecurrent", False: "NullRecurrent", None: "Indeterminate"}[base_pr]
    return MpReport(alpha, h, s_inf, (lo, hi), exact, float(cusp_value), max(p_r, float(cusp_value)),
                    base_class, case, verdict, eq, float(gamma), gamma_fit)
