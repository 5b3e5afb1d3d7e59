#!/usr/bin/env python3
"""Dyadic refinement study across the shipped sample configs.

For each config, runs the solver at n, 2n, ..., prints the sup-node gaps
between consecutive levels and the fitted empirical order.  Closed-form
problems saturate at machine precision and report "exact".

Usage: python3 scripts/convergence_study.py [--levels K] [--config PATH ...]
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from volsweep.cli import convergence_table  # noqa: E402
from volsweep.config import load_problem    # noqa: E402

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--config", action="append", default=None,
                    help="specific config path(s); default: all shipped configs")
    args = ap.parse_args()
    paths = [Path(p) for p in args.config] if args.config else sorted(CONFIG_DIR.glob("*.toml"))
    for path in paths:
        loaded = load_problem(str(path))
        base = min(loaded.options.steps, 200)
        if type(loaded.problem.set).__name__ == "SublevelSet" and loaded.problem.f1 is not None:
            base = max(base, 125)
        print(f"\n== {path.name} (base n = {base}, {loaded.options.memory_rule}) ==")
        result = convergence_table(loaded, args.levels, base_steps=base)
        for i, gap in enumerate(result.gaps):
            print(f"  n {result.step_counts[i]:>6} -> {result.step_counts[i+1]:>6}: "
                  f"sup gap {gap:.6g}")
        order = "exact" if result.exact else f"{result.order:.3f}"
        print(f"  fitted order: {order}")


if __name__ == "__main__":
    main()
