"""Independent reference integrators for tests and acceptance checks.

The reference integrator deliberately uses different numerics from the solver
(Heun's second-order scheme with trapezoid memory versus projected Euler with
left-rectangle memory) so that a shared bug cannot hide in a comparison.  It
handles only the unconstrained regime; callers are responsible for choosing
problems whose trajectories stay interior.
"""
from __future__ import annotations

from typing import Callable, Optional, Union

import numpy as np

from .core import (
    Horizon,
    KernelSpec,
    PerturbationSpec,
    ProblemSpec,
    TimeGrid,
    Trajectory,
    Vector,
    as_vector,
    require_finite,
)


def _as_f1(f1) -> Optional[Callable[[float, Vector], Vector]]:
    if f1 is None:
        return None
    if isinstance(f1, PerturbationSpec):
        return lambda t, x: f1(t, x)
    return lambda t, x: require_finite(as_vector(f1(t, x)), "f1")


class _TrapezoidMemory:
    """History integral with trapezoid weights; factored when the kernel allows."""

    def __init__(self, f2, dim: int):
        self.dim = dim
        self.kernel = None
        self.terms = None
        if f2 is None:
            return
        if isinstance(f2, KernelSpec):
            self.kernel = f2
            self.terms = f2.separable
        else:
            self.kernel = KernelSpec(eval=f2)
        if self.terms:
            self.sums = [None] * len(self.terms)

    def value(self, t: float, nodes, states, extra=None):
        """Integral up to the last committed node, plus an optional trailing pair.

        `extra = (t_new, x_new)` appends one further trapezoid panel ending at a
        tentative state, which is how the predictor stage sees the memory at the
        right endpoint before the step is committed.
        """
        if self.kernel is None:
            return np.zeros(self.dim)
        if self.terms:
            out = np.zeros(self.dim)
            for term, s in zip(self.terms, self.sums):
                acc = np.zeros(np.atleast_2d(term.phi(t)).shape[1]) if s is None else s.copy()
                if extra is not None:
                    t_new, x_new = extra
                    h = t_new - nodes[-1]
                    acc = acc + 0.5 * h * (as_vector(term.psi(float(nodes[-1]), states[-1]))
                                           + as_vector(term.psi(float(t_new), x_new)))
                out += np.atleast_2d(term.phi(t)) @ acc
            return out
        acc = np.zeros(self.dim)
        for j in range(len(states) - 1):
            h = nodes[j + 1] - nodes[j]
            acc += 0.5 * h * (self.kernel(t, float(nodes[j]), states[j])
                              + self.kernel(t, float(nodes[j + 1]), states[j + 1]))
        if extra is not None:
            t_new, x_new = extra
            h = t_new - nodes[-1]
            acc += 0.5 * h * (self.kernel(t, float(nodes[-1]), states[-1])
                              + self.kernel(t, float(t_new), x_new))
        return acc

    def commit(self, t_prev: float, x_prev: Vector, t_new: float, x_new: Vector):
        if self.terms:
            h = t_new - t_prev
            for i, term in enumerate(self.terms):
                contrib = 0.5 * h * (as_vector(term.psi(t_prev, x_prev))
                                     + as_vector(term.psi(t_new, x_new)))
                self.sums[i] = contrib if self.sums[i] is None else self.sums[i] + contrib


def volterra_reference(f1, f2, x0, horizon: Horizon, n: int) -> Trajectory:
    """Integrate x' = -f1(t,x) - int f2(t,s,x(s)) ds by Heun steps with trapezoid memory."""
    x0 = as_vector(x0)
    d = x0.size
    grid = TimeGrid.uniform(horizon, n)
    nodes = grid.nodes
    f1_fn = _as_f1(f1)
    memory = _TrapezoidMemory(f2, d)
    states = np.empty((n + 1, d))
    states[0] = x0
    for k in range(n):
        tk, tk1 = float(nodes[k]), float(nodes[k + 1])
        h = tk1 - tk
        xk = states[k]
        slope1 = -memory.value(tk, nodes[: k + 1], states[: k + 1])
        if f1_fn is not None:
            slope1 = slope1 - f1_fn(tk, xk)
        pred = xk + h * slope1
        slope2 = -memory.value(tk1, nodes[: k + 1], states[: k + 1], extra=(tk1, pred))
        if f1_fn is not None:
            slope2 = slope2 - f1_fn(tk1, pred)
        states[k + 1] = xk + 0.5 * h * (slope1 + slope2)
        require_finite(states[k + 1], "reference state")
        memory.commit(tk, xk, tk1, states[k + 1])
    return Trajectory.from_states(grid, states)


def fine_grid_oracle(prob: ProblemSpec, n_fine: int = 1 << 14) -> Trajectory:
    """Solver run at a reference resolution, used as ground truth for slope fits."""
    from .solver import _solve_on_grid

    grid = TimeGrid.uniform(prob.horizon, n_fine)
    return _solve_on_grid(prob, grid, "trapezoid", 1e-10)
