"""Complementarity-system front-end.

A nonlinear integro-differential complementarity system couples the Volterra
dynamics with multipliers z through 0 <= z, g(t, x) <= 0, <z, g> = 0 acting via
the constraint gradients.  `compile` turns such a system into a sweeping
process over the inequality-described set; `recover_multiplier` reads the
multipliers back off a solved trajectory as nonnegative least-squares fits of
the per-step normal residual.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from .core import KernelSpec, Horizon, PerturbationSpec, ProblemSpec, TimeGrid, Trajectory, Vector, as_vector
from .errors import DomainError
from .sets import SublevelSet, prox_radius_sublevel
from .solver import canonical_memory_rule, memory_series

ACTIVATION_TOL = 1e-6  # absolute threshold on g_i separating active from slack


@dataclass(frozen=True)
class NidcsSpec:
    horizon: Horizon
    f1: Optional[PerturbationSpec]
    f2: Optional[KernelSpec]
    set: SublevelSet
    x0: Vector

    def __post_init__(self):
        object.__setattr__(self, "x0", as_vector(self.x0))
        g0 = self.set.constraint_values(self.horizon.t_start, self.x0)
        if float(np.max(g0)) > ACTIVATION_TOL:
            raise DomainError(
                f"initial state violates the constraints: max g = {float(np.max(g0)):.3e}"
            )


@dataclass(frozen=True)
class MultiplierPath:
    """Per-step multipliers with their complementarity diagnostics.

    Multipliers are constant on each grid interval, matching the piecewise
    nature of the discrete velocity; index k pairs with the step leaving node
    t_k.  Nodes whose active gradients were linearly dependent are flagged:
    there the multiplier is not unique and only a least-squares representative
    is reported.
    """

    grid: TimeGrid
    z: np.ndarray              # (n, m), nonnegative
    comp_gap: np.ndarray       # |<z_k, g(t_k, x_k)>|
    dual_min: np.ndarray       # min component of z_k
    stationarity: np.ndarray   # residual of grad^T z = normal part
    degenerate: tuple


def compile(spec: NidcsSpec) -> ProblemSpec:
    """Assemble the equivalent sweeping process over the inequality set."""
    return ProblemSpec(
        horizon=spec.horizon,
        set=spec.set,
        f1=spec.f1,
        f2=spec.f2,
        x0=spec.x0,
        prox_radius=prox_radius_sublevel(spec.set),
    )


def recover_multiplier(spec: NidcsSpec, traj: Trajectory,
                       rule: str = "left-rectangle",
                       activation_tol: float = ACTIVATION_TOL) -> MultiplierPath:
    """Fit z_k >= 0 (zero on slack constraints) to the per-step normal residual.

    The residual is what the dynamics leave unexplained: -v_k - f1 - memory.
    In the interior it vanishes and z_k = 0; on the boundary it lies in the
    span of the active gradients up to discretisation error.
    """
    rule = canonical_memory_rule(rule)
    prob = compile(spec)
    grid = traj.grid
    n = grid.n_steps
    m = spec.set.constraint_values(grid.horizon.t_start, spec.x0).size
    z = np.zeros((n, m))
    comp = np.zeros(n)
    dual_min = np.zeros(n)
    stat = np.zeros(n)
    degenerate = []
    memories = memory_series(prob, grid, traj.states, rule)
    for k in range(n):
        tk = float(grid.nodes[k])
        xk = traj.states[k]
        residual = -traj.velocities[k] - memories[k]
        if spec.f1 is not None:
            residual = residual - spec.f1(tk, xk)
        gk = spec.set.constraint_values(tk, xk)
        active = np.flatnonzero(gk >= -activation_tol)
        if active.size:
            G = spec.set.constraint_grads(tk, xk)[active]  # (|A|, d)
            if np.linalg.matrix_rank(G) < active.size:
                degenerate.append(k)
            sol, res = nnls(G.T, residual)
            z[k, active] = sol
            stat[k] = res
        else:
            stat[k] = float(np.linalg.norm(residual))
        comp[k] = abs(float(z[k] @ gk))
        dual_min[k] = float(np.min(z[k])) if m else 0.0
    return MultiplierPath(grid=grid, z=z, comp_gap=comp, dual_min=dual_min,
                          stationarity=stat, degenerate=tuple(degenerate))
