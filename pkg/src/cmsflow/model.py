"""Shift models, branch-indexed asymptotic expressions and flow specifications."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

E = math.e


class DomainError(ValueError):
    """An iterated logarithm would be evaluated outside its real domain."""


class ShiftMismatch(ValueError):
    """Two expressions with different log shifts cannot be merged coefficient-wise."""


class ModelError(ValueError):
    """Invalid model or flow specification."""


Number = Fraction | float


def to_fraction(x) -> Fraction:
    """Exact conversion; floats are taken at their binary value, strings parsed as rationals."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite coefficient {x!r}")
        return Fraction(float(x))
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


_NAMED = {"log2": math.log(2.0), "e": E, "pi": math.pi, "1+e": 1.0 + E}


def parse_rational(text: str) -> Fraction:
    """Parse '3', '-1/2', '0.25', unicode minus, or a few named constants (exactly as floats)."""
    s = text.strip().replace("−", "-").replace(" ", "")
    if not s:
        raise ValueError("empty rational")
    sign = 1
    if s[0] in "+-":
        sign = -1 if s[0] == "-" else 1
        s = s[1:]
    if s in _NAMED:
        return sign * Fraction(_NAMED[s])
    if s.startswith("log(") and s.endswith(")"):
        return sign * Fraction(math.log(float(parse_rational(s[4:-1]))))
    return sign * Fraction(s)


def _shift(x) -> Number:
    """Shifts stay exact when given exactly; transcendental shifts (1+e) stay float."""
    if isinstance(x, str):
        s = x.strip().replace("−", "-")
        if s in _NAMED:
            return _NAMED[s]
        return parse_rational(s)
    if isinstance(x, float) and not float(x).is_integer():
        return float(x)
    return to_fraction(x)


@dataclass(frozen=True)
class AsymptoticExpr:
    """Per-branch value c0 + lin*n + c1 log(n+s1) + c2 loglog(n+s2) + c3 logloglog(n+s3).

    ``overrides`` replaces the closed form at finitely many branches. ``normalized``
    declares that the family e^{-value(n)}, n >= 0, sums to exactly one; it is a
    symbolic fact used to resolve boundary comparisons that no finite precision can.
    """

    c0: Fraction = Fraction(0)
    c1: Fraction = Fraction(0)
    c2: Fraction = Fraction(0)
    c3: Fraction = Fraction(0)
    lin: Fraction = Fraction(0)
    s1: Number = Fraction(1)
    s2: Number = Fraction(1)
    s3: Number = Fraction(1)
    overrides: tuple[tuple[int, Fraction], ...] = ()
    n_min: int = 0
    normalized: bool = False
    label: str = ""

    def __post_init__(self):
        for name in ("c0", "c1", "c2", "c3", "lin"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))
        for name in ("s1", "s2", "s3"):
            object.__setattr__(self, name, _shift(getattr(self, name)))
        ov = self.overrides
        if isinstance(ov, Mapping):
            ov = ov.items()
        ov = tuple(sorted((int(k), to_fraction(v)) for k, v in ov))
        object.__setattr__(self, "overrides", ov)
        if self.n_min < 0:
            raise ModelError("n_min must be >= 0")

    # -- structure -----------------------------------------------------------
    @property
    def override_map(self) -> dict[int, Fraction]:
        return dict(self.overrides)

    @property
    def coeffs(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.lin, self.c1, self.c2, self.c3)

    @property
    def shifts(self) -> tuple[Number, Number, Number]:
        return (self.s1, self.s2, self.s3)

    @property
    def first_closed(self) -> int:
        """Smallest branch from which the closed form is used with no override interference."""
        last = max((k for k, _ in self.overrides), default=-1)
        return max(self.n_min, last + 1, self.domain_start())

    def domain_start(self) -> int:
        """Smallest integer n where every active iterated log is defined and positive."""
        need = 0
        if self.c1 != 0:
            need = max(need, math.floor(-float(self.s1)) + 1)
        if self.c2 != 0:
            need = max(need, math.floor(1.0 - float(self.s2)) + 1)
        if self.c3 != 0:
            need = max(need, math.floor(E - float(self.s3)) + 1)
        return need

    def is_zero(self) -> bool:
        return (self.c0 == 0 and all(c == 0 for c in self.coeffs)
                and all(v == 0 for _, v in self.overrides))

    def leading(self) -> tuple[int, Fraction]:
        """(level, coefficient) of the fastest growing active term: 0=lin, 1..3=log levels, -1=const."""
        for lvl, c in enumerate(self.coeffs):
            if c != 0:
                return lvl, c
        return -1, self.c0

    # -- evaluation ----------------------------------------------------------
    def closed(self, n: float) -> float:
        x = float(n)
        v = float(self.c0) + float(self.lin) * x
        if self.c1 != 0:
            a = x + float(self.s1)
            if a <= 0:
                raise DomainError(f"log({a}) at n={n}")
            v += float(self.c1) * math.log(a)
        if self.c2 != 0:
            a = x + float(self.s2)
            if a <= 1:
                raise DomainError(f"loglog({a}) at n={n}")
            v += float(self.c2) * math.log(math.log(a))
        if self.c3 != 0:
            a = x + float(self.s3)
            if a <= E:
                raise DomainError(f"logloglog({a}) at n={n}")
            v += float(self.c3) * math.log(math.log(math.log(a)))
        return v

    def evaluate(self, n: int) -> float:
        if n < 0:
            raise DomainError("branch index must be >= 0")
        ov = self.override_map
        if n in ov:
            return float(ov[n])
        if n < self.n_min:
            raise DomainError(f"no override for branch {n} < n_min={self.n_min}")
        return self.closed(n)

    def exact(self, n: int) -> Fraction:
        """Value as an exact Fraction of its float evaluation (overrides stay exact)."""
        ov = self.override_map
        if n in ov:
            return ov[n]
        return Fraction(self.evaluate(n))

    def values(self, ns: Iterable[int] | np.ndarray) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        out = self.closed_array(ns, check=False)
        ov = self.override_map
        if ov:
            for k, v in ov.items():
                out[ns == k] = float(v)
        bad = (ns < self.n_min) & ~np.isin(ns, list(ov))
        if np.any(bad) or np.any(~np.isfinite(out)):
            raise DomainError("expression undefined on requested branches")
        return out

    def closed_array(self, ns, check: bool = True) -> np.ndarray:
        x = np.asarray(ns, dtype=np.float64)
        out = np.full(x.shape, float(self.c0))
        with np.errstate(invalid="ignore", divide="ignore"):
            if self.lin != 0:
                out += float(self.lin) * x
            if self.c1 != 0:
                out += float(self.c1) * np.log(x + float(self.s1))
            if self.c2 != 0:
                out += float(self.c2) * np.log(np.log(x + float(self.s2)))
            if self.c3 != 0:
                out += float(self.c3) * np.log(np.log(np.log(x + float(self.s3))))
        if check and np.any(~np.isfinite(out)):
            raise DomainError("closed form undefined on requested points")
        return out

    # -- algebra -------------------------------------------------------------
    def scale(self, a) -> "AsymptoticExpr":
        return linear_combine(a, self, 0, ZERO)

    def __add__(self, other: "AsymptoticExpr") -> "AsymptoticExpr":
        return linear_combine(1, self, 1, other)

    def __sub__(self, other: "AsymptoticExpr") -> "AsymptoticExpr":
        return linear_combine(1, self, -1, other)

    def __neg__(self) -> "AsymptoticExpr":
        return self.scale(-1)

    def with_overrides(self, ov: Mapping[int, Number]) -> "AsymptoticExpr":
        merged = self.override_map
        merged.update({int(k): to_fraction(v) for k, v in ov.items()})
        return replace(self, overrides=tuple(merged.items()))

    def same_as(self, other: "AsymptoticExpr", upto: int = 0) -> bool:
        """Exact structural identity of the represented sequences (coefficients, shifts, overrides)."""
        d = linear_combine(1, self, -1, other)
        if d.c0 != 0 or any(c != 0 for c in d.coeffs):
            return False
        return all(v == 0 for _, v in d.overrides)

    def to_json(self) -> dict:
        return {
            "c": [_frac_str(self.c0), _frac_str(self.c1), _frac_str(self.c2), _frac_str(self.c3)],
            "lin": _frac_str(self.lin),
            "s": [_shift_str(s) for s in self.shifts],
            "overrides": {str(k): _frac_str(v) for k, v in self.overrides},
            "n_min": self.n_min,
            "normalized": self.normalized,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "AsymptoticExpr":
        c = list(d.get("c", ["0", "0", "0", "0"]))
        if len(c) != 4:
            raise ModelError("'c' must list four coefficients c0..c3")
        s = list(d.get("s", ["1", "1", "1"]))
        if len(s) != 3:
            raise ModelError("'s' must list three shifts s1..s3")
        ov = {int(k): to_fraction(v) for k, v in dict(d.get("overrides", {})).items()}
        return cls(c0=c[0], c1=c[1], c2=c[2], c3=c[3], lin=d.get("lin", "0"),
                   s1=s[0], s2=s[1], s3=s[2], overrides=ov,
                   n_min=int(d.get("n_min", 0)), normalized=bool(d.get("normalized", False)))


def _frac_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def _shift_str(s: Number) -> str:
    return _frac_str(s) if isinstance(s, Fraction) else repr(float(s))


ZERO = AsymptoticExpr()


def expr_evaluate(e: AsymptoticExpr, n: int) -> float:
    return e.evaluate(n)


def linear_combine(a, e1: AsymptoticExpr, b, e2: AsymptoticExpr) -> AsymptoticExpr:
    """Exact a*e1 + b*e2. Overrides combine pointwise; a missing side uses its closed form."""
    a, b = to_fraction(a), to_fraction(b)
    coeff = {}
    shifts = []
    for k, name in ((1, "c1"), (2, "c2"), (3, "c3")):
        x1 = a * getattr(e1, name)
        x2 = b * getattr(e2, name)
        sh1, sh2 = getattr(e1, f"s{k}"), getattr(e2, f"s{k}")
        if x1 != 0 and x2 != 0 and sh1 != sh2:
            raise ShiftMismatch(f"level {k}: shifts {sh1} vs {sh2}")
        coeff[name] = x1 + x2
        if x1 != 0:
            shifts.append(sh1)
        elif x2 != 0:
            shifts.append(sh2)
        else:
            shifts.append(Fraction(1))
    n_min = max(e1.n_min if a != 0 else 0, e2.n_min if b != 0 else 0)
    ov1, ov2 = e1.override_map, e2.override_map
    keys = sorted(set(ov1) | set(ov2))
    ov = {}
    for n in keys:
        v1 = _exact_at(e1, n, ov1) if a != 0 else Fraction(0)
        v2 = _exact_at(e2, n, ov2) if b != 0 else Fraction(0)
        if v1 is None or v2 is None:
            continue
        ov[n] = a * v1 + b * v2
    missing = [n for n in keys if n not in ov and n >= n_min]
    if missing:
        raise ShiftMismatch(f"overrides at {missing} not combinable")
    # the merged closed form starts no earlier than any branch an override had to cover
    return AsymptoticExpr(c0=a * e1.c0 + b * e2.c0, lin=a * e1.lin + b * e2.lin,
                          s1=shifts[0], s2=shifts[1], s3=shifts[2], overrides=ov,
                          n_min=n_min, **coeff)


def _exact_at(e: AsymptoticExpr, n: int, ov: dict) -> Fraction | None:
    if n in ov:
        return ov[n]
    try:
        return Fraction(e.evaluate(n))
    except DomainError:
        return None


def return_time_expr() -> AsymptoticExpr:
    """r_n = n + 1 on the renewal induced alphabet."""
    return AsymptoticExpr(c0=1, lin=1, label="r")


def constant_expr(c) -> AsymptoticExpr:
    return AsymptoticExpr(c0=c)


# ---------------------------------------------------------------------------
# Base potentials and their first-return induction data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasePotential:
    """First-coordinate potential on the renewal shift.

    phi(j) = head[j] for j < len(head); beyond that phi(j) = const + F(j) - F(j-1)
    where F is an AsymptoticExpr antiderivative. phi(0) may be given separately
    through the head. Either F telescopes into a closed induced form, or only
    the table ``values`` is known.
    """

    head: tuple[float, ...] = ()
    const: Fraction = Fraction(0)
    antiderivative: AsymptoticExpr | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "const", to_fraction(self.const))
        object.__setattr__(self, "head", tuple(float(h) for h in self.head))

    def at(self, j: int) -> float:
        if j < len(self.head):
            return self.head[j]
        if self.values is not None:
            if j >= len(self.values):
                raise DomainError(f"base potential tabulated only up to {len(self.values) - 1}")
            return float(self.values[j])
        F = self.antiderivative
        base = float(self.const)
        if F is None:
            return base
        prev = F.evaluate(j - 1) if j >= 1 else F.closed(-1)
        return base + F.evaluate(j) - prev

    def table(self, n: int) -> np.ndarray:
        return np.array([self.at(j) for j in range(n + 1)])

    @property
    def telescoping(self) -> bool:
        return self.values is None


def constant_potential(c) -> BasePotential:
    return BasePotential(const=to_fraction(c))


# ---------------------------------------------------------------------------
# Markov models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarkovModel:
    kind: str  # "renewal" | "finite" | "full"
    matrix: tuple[tuple[int, ...], ...] | None = None
    mixing: bool | None = None
    return_times: AsymptoticExpr | None = None
    n_branches: int | None = None  # None = countably many

    @property
    def alphabet_size(self) -> int | None:
        if self.kind == "finite":
            return len(self.matrix)
        if self.kind == "full":
            return self.n_branches
        return None

    def return_time(self, n: int) -> int:
        if self.kind == "renewal":
            return n + 1
        if self.kind == "full":
            return int(round(self.return_times.evaluate(n)))
        raise ModelError("finite SFT has no induced alphabet")

    def induced_return_expr(self) -> AsymptoticExpr:
        if self.kind == "renewal":
            return return_time_expr()
        if self.kind == "full":
            return self.return_times
        raise ModelError("finite SFT has no induced alphabet")

    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)


def build_renewal_model() -> MarkovModel:
    return MarkovModel(kind="renewal")


def build_finite_model(matrix: Sequence[Sequence[int]], power_cap: int | None = None) -> MarkovModel:
    A = np.array(matrix, dtype=int)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ModelError("transition matrix must be square and non-empty")
    if not np.isin(A, (0, 1)).all():
        raise ModelError("transition matrix entries must be 0 or 1")
    if (A.sum(axis=1) == 0).any() or (A.sum(axis=0) == 0).any():
        raise ModelError("transition matrix has an all-zero row or column")
    m = A.shape[0]
    cap = power_cap or (m - 1) ** 2 + 1  # Wielandt bound for primitive matrices
    P = np.eye(m, dtype=bool)
    B = A.astype(bool)
    mixing = False
    for _ in range(cap):
        P = (P.astype(int) @ B.astype(int)) > 0
        if P.all():
            mixing = True
            break
    return MarkovModel(kind="finite", matrix=tuple(tuple(int(v) for v in r) for r in A), mixing=mixing)


def build_full_model(return_times: AsymptoticExpr | None = None, n_branches: int | None = None) -> MarkovModel:
    rt = return_times if return_times is not None else constant_expr(1)
    probe = range(min(n_branches or 64, 64))
    for n in probe:
        r = rt.evaluate(n)
        if r < 1 or abs(r - round(r)) > 1e-12:
            raise ModelError(f"return time at branch {n} is not a positive integer: {r}")
    return MarkovModel(kind="full", return_times=rt, n_branches=n_branches)


def enumerate_first_returns(n_max: int) -> dict[int, list[tuple[int, ...]]]:
    """First-return words through state 0 of the renewal graph, grouped by length."""
    succ = lambda s: [s - 1] if s > 0 else list(range(0, n_max + 1))
    out: dict[int, list[tuple[int, ...]]] = {}
    stack = [(0,)]
    while stack:
        w = stack.pop()
        for nxt in succ(w[-1]):
            if nxt == 0:
                out.setdefault(len(w), []).append(w)
            elif len(w) < n_max:
                stack.append(w + (nxt,))
    return out


# ---------------------------------------------------------------------------
# Flow specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowSpec:
    """Suspension flow over a base model, given through induced-branch data.

    ``roof`` holds tau-bar per induced branch, ``flow_potential`` holds Delta-bar_g.
    ``norm_basis`` lists expressions N known (symbolically) to satisfy sum e^{-N} = 1.
    """

    base: MarkovModel
    roof: AsymptoticExpr
    flow_potential: AsymptoticExpr = ZERO
    cusp_value: float | None = None
    hopf_ok: bool = True
    norm_basis: tuple[AsymptoticExpr, ...] = ()
    n_branches: int | None = None
    name: str = ""

    def __post_init__(self):
        if self.base.kind == "finite":
            m = self.base.alphabet_size
            vals = self.roof.values(range(m))
            if np.any(vals <= 0):
                raise ModelError("roof must be positive on every symbol")
            return
        nb = self.n_branches if self.n_branches is not None else self.base.n_branches
        probe = np.arange(min(nb or 4096, 4096))
        vals = self.roof.values(probe)
        if np.any(vals <= 0):
            raise ModelError(f"roof not positive at branch {int(probe[np.argmax(vals <= 0)])}")
        lvl, c = self.roof.leading()
        if nb is None and lvl >= 0 and c < 0:
            raise ModelError("roof eventually negative")
        if nb is None and lvl == -1 and self.roof.c0 <= 0:
            raise ModelError("roof eventually non-positive")

    @property
    def finite_alphabet(self) -> bool:
        return self.base.kind == "finite" or self.branch_count is not None

    @property
    def branch_count(self) -> int | None:
        if self.base.kind == "finite":
            return self.base.alphabet_size
        return self.n_branches if self.n_branches is not None else self.base.n_branches

    def basis(self) -> tuple[AsymptoticExpr, ...]:
        found = [e for e in (self.roof, self.flow_potential) if e.normalized]
        return tuple(found) + tuple(self.norm_basis)


def parse_spec(d: Mapping) -> FlowSpec:
    """Build a FlowSpec from the JSON scenario schema."""
    kind = d.get("model", "renewal")
    if kind == "renewal":
        base = build_renewal_model()
    elif kind == "finite":
        if "matrix" not in d:
            raise ModelError("finite model needs 'matrix'")
        base = build_finite_model(d["matrix"])
    elif kind == "full":
        rt = AsymptoticExpr.from_json(d["return_times"]) if "return_times" in d else None
        base = build_full_model(rt, d.get("n_branches"))
    else:
        raise ModelError(f"unknown model kind {kind!r}")
    if "roof" not in d:
        raise ModelError("spec needs 'roof'")
    roof = AsymptoticExpr.from_json(d["roof"])
    pot = AsymptoticExpr.from_json(d["potential"]) if d.get("potential") else ZERO
    basis = tuple(AsymptoticExpr.from_json(x) for x in d.get("norm_basis", []))
    cusp = d.get("cusp_value")
    return FlowSpec(base=base, roof=roof, flow_potential=pot,
                    cusp_value=None if cusp is None else float(cusp),
                    hopf_ok=bool(d.get("hopf_ok", True)), norm_basis=basis,
                    n_branches=d.get("n_branches"))
