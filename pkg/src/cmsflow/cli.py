"""Command-line front end: ``thermo <verb> [options]``.

Exit codes: 0 computed, 1 indeterminate (or a failed example expectation), 2 input error.
Floats are printed with 12 significant digits; infinities as the strings "inf"/"-inf".
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .model import (
    AsymptoticExpr,
    DomainError,
    FlowSpec,
    ModelError,
    build_finite_model,
    build_renewal_model,
    parse_rational,
    parse_spec,
)

EXIT_OK, EXIT_INDETERMINATE, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _clean(x):
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return str(x)


def emit(payload) -> None:
    sys.stdout.write(json.dumps(_clean(payload), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

def _load_spec(args) -> tuple[str, FlowSpec]:
    from .scenarios import flow_spec

    if getattr(args, "spec", None):
        try:
            data = json.loads(Path(args.spec).read_text())
        except OSError as e:
            raise InputError(f"cannot read {args.spec}: {e}") from None
        except json.JSONDecodeError as e:
            raise InputError(f"{args.spec}: invalid JSON ({e})") from None
        return data.get("name", Path(args.spec).stem), parse_spec(data)
    if getattr(args, "scenario", None):
        return args.scenario, flow_spec(args.scenario)
    raise InputError("give --scenario NAME or --spec FILE")


def _parse_t(text) -> Fraction:
    try:
        return parse_rational(str(text))
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"bad t value {text!r}: {e}") from None


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------

def cmd_pressure(args) -> int:
    from .pressure import (
        dp_pressure_estimate,
        finite_pressure,
        renewal_base_pressure,
        renewal_dp,
        renewal_log_weights,
        truncated_perron,
    )

    if args.spec:
        _, spec = _load_spec(args)
        phibar, model = spec.flow_potential, spec.base
    else:
        model = {"renewal": build_renewal_model}.get(args.model, None)
        if args.model == "finite":
            if not args.matrix:
                raise InputError("--model finite needs --matrix JSON")
            model = build_finite_model(json.loads(args.matrix))
        elif model is None:
            raise InputError(f"unsupported model {args.model!r} for this verb")
        else:
            model = model()
        if args.potential:
            phibar = AsymptoticExpr.from_json(json.loads(args.potential))
        else:
            c = parse_rational(args.const_potential or "0")
            phibar = AsymptoticExpr(c0=c, lin=c)  # induced sum of a constant over n+1 steps
    if model.kind == "finite":
        vals = phibar.values(range(model.alphabet_size)) if args.potential or args.spec \
            else float(parse_rational(args.const_potential or "0"))
        P = finite_pressure(model, vals)
        emit({"model": "finite", **P.as_dict(), "pressure": P.value})
        return EXIT_OK if P.status != "Indeterminate" else EXIT_INDETERMINATE
    P = renewal_base_pressure(phibar)
    out = {"model": "renewal", "pressure": P.value, **{k: v for k, v in P.as_dict().items() if k != "value"}}
    if args.all_routes:
        lw = renewal_log_weights(phibar, args.dp_n)
        est = dp_pressure_estimate(renewal_dp(lw, args.dp_n))
        phi_vals = np.diff(np.concatenate([[0.0], phibar.values(np.arange(args.perron_m + 1))]))
        tp = truncated_perron(model, phi_vals, [args.perron_m])[-1]
        out["routes"] = {"induced": P.value, "dp": {"n_max": args.dp_n, "estimate": est.estimate},
                         "perron": {"M": args.perron_m, "lo": tp.lo, "hi": tp.hi}}
    emit(out)
    return EXIT_INDETERMINATE if P.status == "Indeterminate" else EXIT_OK


def cmd_flow_pressure(args) -> int:
    from .flow import flow_pressure, s_infinity

    name, spec = _load_spec(args)
    t = _parse_t(args.t)
    fp = flow_pressure(spec, t)
    emit({"name": name, **fp.as_dict(), "s_infinity": s_infinity(spec.roof, spec.finite_alphabet)})
    return EXIT_INDETERMINATE if fp.indeterminate else EXIT_OK


def cmd_entropy(args) -> int:
    if args.scenario and args.scenario.startswith("mp_alpha"):
        from .scenarios import build
        sc = build(args.scenario)
        return _mp_output(sc.params["alpha"], sc.params["n_max"], 0, 0.0, False, entropy_only=True)
    from .flow import flow_entropy, s_infinity

    name, spec = _load_spec(args)
    fp = flow_entropy(spec)
    emit({"name": name, "h_flow": fp.value, "err": fp.err, "lo": fp.lo, "hi": fp.hi,
          "infinite": fp.infinite, "s_infinity": s_infinity(spec.roof, spec.finite_alphabet),
          "sticks_to_boundary": fp.sticks})
    return EXIT_INDETERMINATE if fp.indeterminate else EXIT_OK


def cmd_classify(args) -> int:
    from .flow import Existence, equilibrium_decision

    name, spec = _load_spec(args)
    rep = equilibrium_decision(spec, _parse_t(args.t))
    emit({"name": name, **rep.as_dict()})
    return EXIT_INDETERMINATE if rep.equilibrium is Existence.INDETERMINATE else EXIT_OK


def cmd_phase_scan(args) -> int:
    from .phase import scan, to_csv

    name, spec = _load_spec(args)
    if args.grid:
        grid = [float(_parse_t(x)) for x in args.grid.split(",")]
    else:
        if args.step <= 0 or args.t_max < args.t_min:
            raise InputError("need step > 0 and t-max >= t-min")
        k = int(round((args.t_max - args.t_min) / args.step))
        grid = [round(args.t_min + i * args.step, 12) for i in range(k + 1)]
    rep = scan(spec, grid, workers=args.workers)
    if args.csv:
        sys.stdout.write(to_csv(rep))
    else:
        emit({"name": name, **rep.as_dict()})
    return EXIT_OK


def cmd_example(args) -> int:
    from .scenarios import build, run

    verdict = run(build(args.name))
    emit(verdict)
    return EXIT_OK if verdict["pass"] else EXIT_INDETERMINATE


def _mp_output(alpha, n_max, scale, cusp, csv_out, entropy_only=False) -> int:
    from .mp import build_branches, mp_equilibrium

    if alpha <= 0 or n_max < 2:
        raise InputError("need alpha > 0 and at least 2 branches")
    data = build_branches(alpha, n_max)
    if csv_out:
        lines = ["n,tau_lo,tau_hi,cyl_len"]
        lines += [f"{n},{lo:.12g},{hi:.12g},{ln:.12g}" for n, lo, hi, ln in data.csv_rows()]
        sys.stdout.write("\n".join(lines) + "\n")
        return EXIT_OK
    rep = mp_equilibrium(alpha, n_max, scale=parse_rational(str(scale)), cusp_value=cusp, data=data)
    if entropy_only:
        emit({"name": f"mp_alpha({alpha:g})", "h_flow": 0.5 * (rep.entropy.lo + rep.entropy.hi),
              "lo": rep.entropy.lo, "hi": rep.entropy.hi, "s_infinity": rep.s_infinity.as_dict()})
        return EXIT_OK
    emit(rep.as_dict())
    return EXIT_INDETERMINATE if rep.equilibrium == "Indeterminate" else EXIT_OK


def cmd_mp(args) -> int:
    return _mp_output(args.alpha, args.branches, args.scale, args.cusp_value, args.csv)


def cmd_list(args) -> int:
    from .scenarios import names

    emit({"scenarios": names()})
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _spec_opts(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--scenario", help="built-in scenario name (see `thermo list`)")
    g.add_argument("--spec", help="flow spec JSON file")


def _output_opts(p: argparse.ArgumentParser, csv: bool = False) -> None:
    p.add_argument("--json", action="store_true", help="JSON output (default)")
    if csv:
        p.add_argument("--csv", action="store_true", help="CSV output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermo", description="Thermodynamic formalism for countable "
                                 "Markov shifts and suspension flows.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("pressure", help="Gurevich pressure of a base potential")
    p.add_argument("--model", default="renewal", choices=["renewal", "finite"])
    p.add_argument("--matrix", help="0/1 transition matrix as JSON (finite model)")
    p.add_argument("--const-potential", help="constant potential value, e.g. -log2 or 1/3")
    p.add_argument("--potential", help="induced values as AsymptoticExpr JSON")
    p.add_argument("--spec", help="flow spec JSON file; its potential is used")
    p.add_argument("--all-routes", action="store_true", help="also run the DP and truncated Perron routes")
    p.add_argument("--dp-n", type=int, default=200)
    p.add_argument("--perron-m", type=int, default=50)
    _output_opts(p)
    p.set_defaults(func=cmd_pressure, scenario=None)

    p = sub.add_parser("flow-pressure", help="P_Phi(t g)")
    _spec_opts(p)
    p.add_argument("--t", default="0")
    _output_opts(p)
    p.set_defaults(func=cmd_flow_pressure)

    p = sub.add_parser("entropy", help="topological entropy of the flow")
    _spec_opts(p)
    _output_opts(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("classify", help="recurrence classes and equilibrium verdict at t")
    _spec_opts(p)
    p.add_argument("--t", default="0")
    _output_opts(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("phase-scan", help="t -> P_Phi(t g) on a grid with regime tags")
    _spec_opts(p)
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=4.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--grid", help="comma-separated t values (overrides the range)")
    p.add_argument("--workers", type=int, default=1)
    _output_opts(p, csv=True)
    p.set_defaults(func=cmd_phase_scan)

    p = sub.add_parser("example", help="run a built-in scenario and print its verdict")
    p.add_argument("name")
    _output_opts(p)
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("mp", help="Manneville-Pomeau flow brackets and equilibrium verdict")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--branches", type=int, default=10_000)
    p.add_argument("--scale", default="0", help="Delta_g = scale * log|f'|")
    p.add_argument("--cusp-value", type=float, default=0.0, help="value of g at the fixed point")
    _output_opts(p, csv=True)
    p.set_defaults(func=cmd_mp)

    p = sub.add_parser("list", help="list built-in scenarios")
    _output_opts(p)
    p.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    from .flow import NoFiniteEntropy
    from .scenarios import UnknownScenario

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ModelError, DomainError, UnknownScenario, json.JSONDecodeError) as e:
        msg = e.args[0] if isinstance(e, UnknownScenario) and e.args else e
        print(f"thermo: error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except NoFiniteEntropy as e:
        print(f"thermo: {e}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except ValueError as e:
        print(f"thermo: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
