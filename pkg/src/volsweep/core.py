"""Domain types shared by every module: horizons, grids, problem data, trajectories.

All types are immutable after construction.  Evaluator callables stored in the
specs must be pure (same inputs, same outputs); the solver relies on this when
it re-evaluates drifts during refinement sweeps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, EvaluationError

# Absolute tolerance for the initial-state membership test x0 in C(t_start).
FEASIBILITY_TOL = 1e-9

Vector = np.ndarray


def as_vector(x) -> Vector:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise DomainError(f"expected a vector, got array of shape {v.shape}")
    return v


def require_finite(arr, what: str):
    if not np.all(np.isfinite(arr)):
        raise EvaluationError(f"{what} produced non-finite values")
    return arr


@dataclass(frozen=True)
class Horizon:
    """Closed time interval on which a problem lives."""

    t_start: float
    t_end: float

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise DomainError("horizon endpoints must be finite")
        if not self.t_end > self.t_start:
            raise DomainError(f"horizon needs t_start < t_end, got [{self.t_start}, {self.t_end}]")

    @property
    def length(self) -> float:
        return self.t_end - self.t_start

    def contains(self, t: float) -> bool:
        return self.t_start <= t <= self.t_end

    def check(self, t: float):
        if not self.contains(t):
            raise DomainError(f"time {t} outside horizon [{self.t_start}, {self.t_end}]")


@dataclass(frozen=True)
class TimeGrid:
    """Ascending node times t_0 < t_1 < ... < t_n covering the horizon exactly."""

    horizon: Horizon
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise DomainError("grid needs at least two nodes")
        if not np.all(np.diff(nodes) > 0):
            raise DomainError("grid nodes must be strictly increasing")
        if nodes[0] != self.horizon.t_start or nodes[-1] != self.horizon.t_end:
            raise DomainError("grid must start at t_start and end at t_end")

    @classmethod
    def uniform(cls, horizon: Horizon, n: int) -> "TimeGrid":
        if n < 1:
            raise DomainError("uniform grid needs n >= 1 steps")
        return cls(horizon, np.linspace(horizon.t_start, horizon.t_end, n + 1))

    @property
    def n_steps(self) -> int:
        return self.nodes.size - 1

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def max_step(self) -> float:
        return float(np.max(self.steps))

    def delay_index(self, t: float) -> int:
        """Index k with t in (t_k, t_{k+1}]; 0 at t = t_start."""
        self.horizon.check(t)
        if t == self.nodes[0]:
            return 0
        k = int(np.searchsorted(self.nodes, t, side="left")) - 1
        return max(k, 0)


def delay_map(grid: TimeGrid, t: float) -> float:
    """Left node of the half-open interval containing t: the lag used when drifts are frozen.

    Maps t_start to itself and any t in (t_k, t_{k+1}] to t_k, so interior
    nodes resolve to the previous node.
    """
    return float(grid.nodes[grid.delay_index(t)])


@dataclass(frozen=True)
class PerturbationSpec:
    """Single-time forcing x' <- f(t, x), with optional growth/Lipschitz data.

    growth_beta1(t) bounds ||eval(t,x)|| by growth_beta1(t) * (1 + ||x||) on the
    feasible tube; lipschitz_radius(eta) returns t -> constant valid on the ball
    of radius eta.  Both are used only by bound/certificate computations and are
    checked by sampling, never assumed.
    """

    eval: Callable[[float, Vector], Vector]
    growth_beta1: Optional[Callable[[float], float]] = None
    lipschitz_radius: Optional[Callable[[float], Callable[[float], float]]] = None

    def __call__(self, t: float, x: Vector) -> Vector:
        return require_finite(as_vector(self.eval(t, x)), "f1")


@dataclass(frozen=True)
class SeparableTerm:
    """One factored memory contribution phi(t) @ psi(s, x).

    phi(t) is a (d, p) matrix, psi(s, x) a length-p vector; summing terms
    reproduces the kernel.  The factorization lets the solver accumulate the
    history sum once per step instead of revisiting it.
    """

    phi: Callable[[float], np.ndarray]
    psi: Callable[[float, Vector], Vector]


@dataclass(frozen=True)
class KernelSpec:
    """Two-time Volterra kernel (t, s, x) -> vector, queried only for s <= t."""

    eval: Callable[[float, float, Vector], Vector]
    growth_beta2: Optional[Callable[[float, float], float]] = None
    affine_growth: Optional[tuple] = None  # (g(t,s), alpha(t)) with ||f2|| <= g + alpha*||x||
    lipschitz_radius: Optional[Callable[[float], Callable[[float], float]]] = None
    separable: Optional[tuple] = None  # tuple of SeparableTerm

    def __call__(self, t: float, s: float, x: Vector) -> Vector:
        if s > t:
            raise DomainError(f"kernel queried outside the ordered domain: s={s} > t={t}")
        return require_finite(as_vector(self.eval(t, s, x)), "f2")


@dataclass(frozen=True)
class ProblemSpec:
    """Full problem description: moving set, forcings, initial state, prox radius."""

    horizon: Horizon
    set: "object"  # MovingSet; typed loosely to avoid an import cycle with sets
    f1: Optional[PerturbationSpec]
    f2: Optional[KernelSpec]
    x0: Vector
    prox_radius: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "x0", as_vector(self.x0))
        require_finite(self.x0, "x0")
        r = self.prox_radius
        if r is None:
            r = float(self.set.prox_radius())
        r = float(r)
        if not r > 0:
            raise DomainError(f"prox radius must be positive, got {r}")
        object.__setattr__(self, "prox_radius", r)
        d0 = float(self.set.distance(self.horizon.t_start, self.x0))
        if d0 > FEASIBILITY_TOL:
            raise DomainError(
                f"x0 = {self.x0.tolist()} infeasible at t = {self.horizon.t_start}: "
                f"distance {d0:.3e} exceeds tolerance {FEASIBILITY_TOL:.0e}"
            )

    @property
    def dim(self) -> int:
        return self.x0.size


@dataclass(frozen=True)
class Trajectory:
    """Node states with the discrete velocities of each step."""

    grid: TimeGrid
    states: np.ndarray      # (n+1, d)
    velocities: np.ndarray  # (n, d)

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        vel = np.asarray(self.velocities, dtype=float)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "velocities", vel)
        if states.shape[0] != self.grid.nodes.size:
            raise DomainError("one state per grid node required")
        if vel.shape[0] != states.shape[0] - 1:
            raise DomainError("one velocity per grid step required")

    @classmethod
    def from_states(cls, grid: TimeGrid, states: Sequence[Vector]) -> "Trajectory":
        arr = np.asarray(states, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        vel = np.diff(arr, axis=0) / grid.steps[:, None]
        return cls(grid, arr, vel)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def interpolate(self, t: float) -> Vector:
        """Piecewise-linear value; exact state at nodes, affine in between."""
        self.grid.horizon.check(t)
        nodes = self.grid.nodes
        j = int(np.searchsorted(nodes, t, side="left"))
        if j < nodes.size and nodes[j] == t:
            return self.states[j].copy()
        k = j - 1
        h = nodes[k + 1] - nodes[k]
        lam = (t - nodes[k]) / h
        return self.states[k] + lam * (self.states[k + 1] - self.states[k])

    def __call__(self, t: float) -> Vector:
        return self.interpolate(t)

    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.velocities, axis=1)


def interpolate(traj: Trajectory, t: float) -> Vector:
    return traj.interpolate(t)
