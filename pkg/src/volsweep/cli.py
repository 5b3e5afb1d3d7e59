"""Command-line surface: configs in, trajectory/waveform CSVs and reports out.

Exit codes: 0 success, 1 config parse error, 2 validation error, 3 solver
error (the message names the failing step).  CSV values carry 17 significant
digits so files round-trip exactly; on-screen tables round to 6.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .config import LoadedProblem, load_problem
from .circuits import diode_waveforms
from .errors import (
    ConfigError,
    DataMissingError,
    DomainError,
    EvaluationError,
    InvalidCircuitError,
    ProjectionFailureError,
    ReachExceededError,
    StepTooCoarseError,
)
from .gronwall import BoundsReport, apriori_constants
from .nidcs import recover_multiplier
from .solver import SolveOptions, SolveReport, _solve_on_grid, canonical_memory_rule, solve
from .core import TimeGrid, Trajectory

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

_EXACT_GAP = 1e-13  # below this, levels agree to machine precision


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _human(x: float) -> str:
    return f"{float(x):.6g}"


def _write_trajectory_csv(path: str, loaded: LoadedProblem, report: SolveReport,
                          memory_rule: str):
    traj = report.trajectory
    n = traj.grid.n_steps
    d = traj.dim
    speeds = traj.speeds()
    dists = [loaded.problem.set.distance(float(t), x)
             for t, x in zip(traj.grid.nodes, traj.states)]
    z = None
    if loaded.nidcs is not None:
        z = recover_multiplier(loaded.nidcs, traj, rule=memory_rule).z
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["t"] + [f"x_{i + 1}" for i in range(d)] + ["dist", "speed"]
        if z is not None:
            header += [f"z_{j + 1}" for j in range(z.shape[1])]
        writer.writerow(header)
        for k in range(n + 1):
            vk = speeds[min(k, n - 1)]
            row = [_fmt(traj.grid.nodes[k])] + [_fmt(v) for v in traj.states[k]] \
                + [_fmt(dists[k]), _fmt(vk)]
            if z is not None:
                row += [_fmt(v) for v in z[min(k, n - 1)]]
            writer.writerow(row)


def _print_bounds(bounds: Optional[BoundsReport]):
    if bounds is None:
        print("  bounds              : unavailable (growth data not supplied)")
        return
    edges = ", ".join(_human(e) for e in bounds.window_edges)
    wb = ", ".join(_human(b) for b in bounds.window_state_bounds)
    print(f"  forcing mass        : {_human(bounds.forcing_mass)}")
    print(f"  window edges        : [{edges}]")
    print(f"  window state bounds : [{wb}]")
    if bounds.affine_state_bound is not None:
        print(f"  affine state bound  : {_human(bounds.affine_state_bound)}")
    else:
        print("  affine state bound  : unavailable (no affine kernel growth)")


def cmd_solve(config_path: str, steps: Optional[int], output_path: str,
              memory: Optional[str] = None) -> int:
    loaded = load_problem(config_path)
    opts = loaded.options
    if steps is not None:
        opts = replace(opts, steps=int(steps), grid=None)
    if memory is not None:
        opts = replace(opts, memory_rule=canonical_memory_rule(memory))
    report = solve(loaded.problem, opts)
    _write_trajectory_csv(output_path, loaded, report, opts.memory_rule)
    print(f"solved {config_path} with {report.trajectory.grid.n_steps} steps "
          f"({opts.memory_rule} memory)")
    print(f"  feasibility max     : {_human(report.feasibility)}")
    if report.velocity_margin is not None:
        print(f"  velocity margin     : {_human(report.velocity_margin)}")
    else:
        print("  velocity margin     : unavailable (growth data not supplied)")
    if report.cauchy_gap is not None:
        print(f"  cauchy gap          : {_human(report.cauchy_gap)}")
    _print_bounds(report.bounds)
    print(f"  wrote {output_path}")
    return EXIT_OK


@dataclass
class ConvergenceResult:
    step_counts: list
    gaps: list
    order: Optional[float]   # None when every gap is at machine precision

    @property
    def exact(self) -> bool:
        return self.order is None


def convergence_table(loaded: LoadedProblem, levels: int,
                      memory: Optional[str] = None,
                      base_steps: Optional[int] = None) -> ConvergenceResult:
    """Sup-node gaps between consecutive dyadic refinements and the fitted order."""
    if levels < 1:
        raise DomainError("need at least one doubling level")
    opts = loaded.options
    rule = canonical_memory_rule(memory) if memory is not None else opts.memory_rule
    n0 = base_steps if base_steps is not None else opts.steps
    prob = loaded.problem
    ns = [n0 * (2 ** i) for i in range(levels + 1)]
    trajs = [_solve_on_grid(prob, TimeGrid.uniform(prob.horizon, n), rule, opts.projection_tol)
             for n in ns]
    gaps = []
    for coarse, fine in zip(trajs[:-1], trajs[1:]):
        gap = max(float(np.linalg.norm(fine.interpolate(float(t)) - x))
                  for t, x in zip(coarse.grid.nodes, coarse.states))
        gaps.append(gap)
    positive = [(i, g) for i, g in enumerate(gaps) if g > _EXACT_GAP]
    if not positive:
        return ConvergenceResult(step_counts=ns, gaps=gaps, order=None)
    idx = np.array([i for i, _ in positive], dtype=float)
    logs = np.log2([g for _, g in positive])
    if idx.size == 1:
        return ConvergenceResult(step_counts=ns, gaps=gaps, order=None)
    slope = np.polyfit(idx, logs, 1)[0]
    return ConvergenceResult(step_counts=ns, gaps=gaps, order=float(-slope))


def cmd_converge(config_path: str, levels: int, memory: Optional[str] = None) -> int:
    loaded = load_problem(config_path)
    result = convergence_table(loaded, levels, memory=memory)
    print(f"{'level':>5} {'n coarse':>9} {'n fine':>9} {'sup gap':>12}")
    for i, gap in enumerate(result.gaps):
        print(f"{i:>5} {result.step_counts[i]:>9} {result.step_counts[i + 1]:>9} "
              f"{_human(gap):>12}")
    if result.exact:
        print("empirical order: exact (gaps at machine precision)")
    else:
        print(f"empirical order: {result.order:.3f}")
    return EXIT_OK


def cmd_circuit(config_path: str, output_path: str) -> int:
    loaded = load_problem(config_path)
    if loaded.circuit is None:
        raise ConfigError("config has no [circuit] section")
    report = solve(loaded.problem, loaded.options)
    waves = diode_waveforms(loaded.circuit, report.trajectory,
                            rule=loaded.options.memory_rule)
    with open(output_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x1", "x2", "i_src", "iD1", "iD2", "vD1", "vD2",
                         "comp_gap1", "comp_gap2"])
        for k in range(waves.t.size):
            writer.writerow([_fmt(v) for v in (
                waves.t[k], waves.x1[k], waves.x2[k], waves.i_src[k],
                waves.id1[k], waves.id2[k], waves.vd1[k], waves.vd2[k],
                waves.comp_gap1[k], waves.comp_gap2[k])])
    print(f"solved circuit with {report.trajectory.grid.n_steps} steps")
    print(f"  feasibility max     : {_human(report.feasibility)}")
    print(f"  max comp gap        : {_human(max(np.max(waves.comp_gap1), np.max(waves.comp_gap2)))}")
    print(f"  wrote {output_path}")
    return EXIT_OK


def cmd_bounds(config_path: str) -> int:
    loaded = load_problem(config_path)
    bounds = apriori_constants(loaded.problem)
    print(f"a priori bounds for {config_path}")
    _print_bounds(bounds)
    t0, t1 = loaded.problem.horizon.t_start, loaded.problem.horizon.t_end
    probes = np.linspace(t0, t1, 5)[1:]
    for t in probes:
        print(f"  velocity bound t={_human(t)} : {_human(bounds.velocity_bound(float(t)))}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volsweep",
        description="Sweeping-process solver: trajectories, convergence tables, "
                    "circuit waveforms and bound reports from TOML configs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a config and write the trajectory CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--memory", choices=["left", "trap", "left-rectangle", "trapezoid"],
                   default=None)

    p = sub.add_parser("converge", help="dyadic refinement study with fitted order")
    p.add_argument("--config", required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--memory", choices=["left", "trap", "left-rectangle", "trapezoid"],
                   default=None)

    p = sub.add_parser("circuit", help="solve a circuit config and write waveforms")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bounds", help="print the a priori bound report only")
    p.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args.config, args.steps, args.out, args.memory)
        if args.command == "converge":
            return cmd_converge(args.config, args.levels, args.memory)
        if args.command == "circuit":
            return cmd_circuit(args.config, args.out)
        if args.command == "bounds":
            return cmd_bounds(args.config)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE if exc.parse else EXIT_VALIDATION
    except (DomainError, DataMissingError, InvalidCircuitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StepTooCoarseError, ProjectionFailureError, ReachExceededError,
            EvaluationError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
