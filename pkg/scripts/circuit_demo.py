#!/usr/bin/env python3
"""Solve the default diode circuit and inspect the switching behaviour.

Writes the waveform CSV and prints where each diode conducts or blocks.
With --plot, also renders the currents and recovered diode voltages to a PNG.

Usage: python3 scripts/circuit_demo.py [--config PATH] [--steps N]
                                       [--out waves.csv] [--plot waves.png]
"""
import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import volsweep as vs  # noqa: E402

DEFAULT = Path(__file__).resolve().parent.parent / "configs" / "circuit.toml"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(DEFAULT))
    ap.add_argument("--steps", type=int, default=None)
    ap.add_argument("--out", default="waves.csv")
    ap.add_argument("--plot", default=None)
    args = ap.parse_args()

    from volsweep.cli import cmd_circuit
    loaded = vs.load_problem(args.config)
    opts = loaded.options
    if args.steps is not None:
        from dataclasses import replace
        opts = replace(opts, steps=args.steps, grid=None)
    rep = vs.solve(loaded.problem, opts)
    waves = vs.diode_waveforms(loaded.circuit, rep.trajectory, rule=opts.memory_rule)

    blocking = waves.id1 <= 1e-9
    switches = int(np.sum(blocking[1:] != blocking[:-1]))
    print(f"steps             : {rep.trajectory.grid.n_steps}")
    print(f"feasibility max   : {rep.feasibility:.3g}")
    print(f"D1 blocking share : {float(np.mean(blocking)):.1%} of nodes, "
          f"{switches} switching events")
    print(f"max |vD1|, |vD2|  : {float(np.max(-waves.vd1)):.4g}, "
          f"{float(np.max(-waves.vd2)):.4g}")
    print(f"max comp gaps     : {float(np.max(waves.comp_gap1)):.3g}, "
          f"{float(np.max(waves.comp_gap2)):.3g}")

    rc = cmd_circuit(args.config, args.out)
    if rc != 0:
        sys.exit(rc)

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
        ax1.plot(waves.t, waves.x1, label="x1")
        ax1.plot(waves.t, waves.x2, label="x2")
        ax1.plot(waves.t, waves.i_src, "--", label="source")
        ax1.set_ylabel("current")
        ax1.legend()
        ax2.plot(waves.t, waves.vd1, label="vD1")
        ax2.plot(waves.t, waves.vd2, label="vD2")
        ax2.set_xlabel("t")
        ax2.set_ylabel("diode voltage")
        ax2.legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=130)
        print(f"wrote {args.plot}")


if __name__ == "__main__":
    main()
