"""Run every built-in scenario and print a pass/fail table; exit status 1 if any fails."""

from __future__ import annotations

import argparse
import json
import sys
import time

from cmsflow.scenarios import build, names, recurrence_pairs, run


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--json", action="store_true", help="dump full verdicts as JSON")
    ap.add_argument("--skip-mp", action="store_true", help="skip the Manneville-Pomeau scenarios")
    args = ap.parse_args()

    verdicts, ok = {}, True
    for name in names():
        if args.skip_mp and name.startswith("mp_alpha"):
            continue
        t0 = time.perf_counter()
        v = run(build(name))
        verdicts[name] = v
        ok &= v["pass"]
        bad = [e["field"] for e in v["expectations"] if not e["pass"]]
        print(f"{'ok  ' if v['pass'] else 'FAIL'} {name:<20} {time.perf_counter() - t0:6.2f}s "
              f"{len(v['expectations'])} checks" + (f"  failed: {bad}" if bad else ""))
    print("\n(base class, flow class) pairs:")
    for (b, f), where in sorted(recurrence_pairs().items()):
        print(f"  {b:<18} {f:<18} {where}")
    if args.json:
        print(json.dumps(verdicts, indent=2, default=str))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
