"""Catching-up time stepper for the integro-differential sweeping process.

Each step freezes the single-time forcing and the accumulated memory integral
at the left node, drifts explicitly, and projects onto the set at the right
node.  Memory is a Riemann sum over the trajectory history: quadratic cost per
solve for a general kernel, linear when the kernel declares a separable
factorisation (the history sum then updates in O(1) per step).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import ProblemSpec, TimeGrid, Trajectory, Vector, as_vector
from .errors import (
    DataMissingError,
    DegenerateInputError,
    DomainError,
    ReachExceededError,
    StepTooCoarseError,
)
from .gronwall import BoundsReport, affine_state_bound, apriori_constants
from .quad import integrate

MEMORY_RULES = ("left-rectangle", "trapezoid")
_ALIASES = {"left": "left-rectangle", "lr": "left-rectangle", "left-rectangle": "left-rectangle",
            "trap": "trapezoid", "tr": "trapezoid", "trapezoid": "trapezoid"}


def canonical_memory_rule(name: str) -> str:
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise DomainError(f"unknown memory rule {name!r}; use one of {MEMORY_RULES}") from None


@dataclass(frozen=True)
class RefineOptions:
    """Double the step count until successive trajectories agree to `target`."""

    target: float
    max_doublings: int = 6

    def __post_init__(self):
        if not self.target > 0:
            raise DomainError("refinement target must be positive")
        if self.max_doublings < 1:
            raise DomainError("need at least one doubling")


@dataclass(frozen=True)
class SolveOptions:
    steps: Optional[int] = None
    grid: Optional[TimeGrid] = None
    memory_rule: str = "left-rectangle"
    projection_tol: float = 1e-10
    refine: Optional[RefineOptions] = None

    def __post_init__(self):
        if (self.steps is None) == (self.grid is None):
            raise DomainError("give either a step count or an explicit grid")
        if self.steps is not None and self.steps < 1:
            raise DomainError("need at least one step")
        if not self.projection_tol > 0:
            raise DomainError("projection tolerance must be positive")
        object.__setattr__(self, "memory_rule", canonical_memory_rule(self.memory_rule))

    def make_grid(self, prob: ProblemSpec) -> TimeGrid:
        return self.grid if self.grid is not None else TimeGrid.uniform(prob.horizon, self.steps)


@dataclass
class SolveReport:
    trajectory: Trajectory
    feasibility: float
    velocity_margin: Optional[float] = None
    cauchy_gap: Optional[float] = None
    bounds: Optional[BoundsReport] = None


def memory_term(prob: ProblemSpec, grid: TimeGrid, states, k: int,
                rule: str = "left-rectangle") -> Vector:
    """Quadrature of the history integral of the kernel up to node k.

    Left-rectangle weights each past interval by its left sample; trapezoid
    averages both ends (states[0..k] are all known, so the j = k-1 right sample
    exists).  A separable kernel is accumulated in factored form.
    """
    rule = canonical_memory_rule(rule)
    d = prob.dim
    f2 = prob.f2
    if f2 is None or k == 0:
        return np.zeros(d)
    nodes = grid.nodes
    tk = float(nodes[k])
    hs = grid.steps
    if f2.separable:
        out = np.zeros(d)
        for term in f2.separable:
            acc = None
            for j in range(k):
                if rule == "left-rectangle":
                    contrib = hs[j] * as_vector(term.psi(float(nodes[j]), states[j]))
                else:
                    contrib = 0.5 * hs[j] * (as_vector(term.psi(float(nodes[j]), states[j]))
                                             + as_vector(term.psi(float(nodes[j + 1]), states[j + 1])))
                acc = contrib if acc is None else acc + contrib
            out += np.atleast_2d(term.phi(tk)) @ acc
        return out
    acc = np.zeros(d)
    for j in range(k):
        if rule == "left-rectangle":
            acc += hs[j] * f2(tk, float(nodes[j]), as_vector(states[j]))
        else:
            acc += 0.5 * hs[j] * (f2(tk, float(nodes[j]), as_vector(states[j]))
                                  + f2(tk, float(nodes[j + 1]), as_vector(states[j + 1])))
    return acc


def memory_series(prob: ProblemSpec, grid: TimeGrid, states, rule: str = "left-rectangle") -> np.ndarray:
    """Memory vectors at every step start of a known trajectory, shape (n, d).

    Uses the factored accumulation for separable kernels, so post-hoc passes
    over a solved trajectory (multiplier recovery, diagnostics) stay linear.
    """
    rule = canonical_memory_rule(rule)
    n = grid.n_steps
    d = prob.dim
    out = np.zeros((n, d))
    if prob.f2 is None:
        return out
    nodes = grid.nodes
    hs = grid.steps
    if prob.f2.separable:
        sep = _SeparableAccumulator(prob.f2.separable, rule)
        for k in range(n):
            out[k] = sep.memory(float(nodes[k]), d)
            sep.advance(float(nodes[k]), as_vector(states[k]),
                        float(nodes[k + 1]), as_vector(states[k + 1]), float(hs[k]))
        return out
    for k in range(n):
        out[k] = memory_term(prob, grid, states[: k + 1], k, rule)
    return out


def _drift(prob: ProblemSpec, t: float, x: Vector, memory: Vector) -> Vector:
    if prob.f1 is None:
        return memory.copy()
    return prob.f1(t, x) + memory


def _guarded_step(prob: ProblemSpec, tk: float, tk1: float, hk: float,
                  xk: Vector, drift: Vector, tol: float) -> Vector:
    r = prob.prox_radius
    if math.isfinite(r):
        sweep = prob.set.variation(tk, tk1)
        if float(np.linalg.norm(drift)) * hk + sweep >= 0.5 * r:
            raise StepTooCoarseError(
                f"step [{tk}, {tk1}]: drift and set motion reach half the prox radius "
                f"{r:.4g}; refine the grid"
            )
    y = xk - hk * drift
    try:
        return prob.set.project(tk1, y, tol=tol)
    except ReachExceededError as exc:
        raise StepTooCoarseError(
            f"projection at t = {tk1} left the uniqueness tube ({exc}); refine the grid"
        ) from exc


def step(prob: ProblemSpec, grid: TimeGrid, states, k: int,
         rule: str = "left-rectangle", projection_tol: float = 1e-10) -> Vector:
    """One catching-up step: project the drifted state onto the next set."""
    xk = as_vector(states[k])
    tk, tk1 = float(grid.nodes[k]), float(grid.nodes[k + 1])
    mem = memory_term(prob, grid, states, k, rule)
    drift = _drift(prob, tk, xk, mem)
    return _guarded_step(prob, tk, tk1, float(grid.steps[k]), xk, drift, projection_tol)


class _SeparableAccumulator:
    """Running factored history sums, one per separable term."""

    def __init__(self, terms, rule: str):
        self.terms = terms
        self.rule = rule
        self.sums = [None] * len(terms)

    def advance(self, tj: float, xj: Vector, tj1: float, xj1: Vector, h: float):
        for i, term in enumerate(self.terms):
            if self.rule == "left-rectangle":
                contrib = h * as_vector(term.psi(tj, xj))
            else:
                contrib = 0.5 * h * (as_vector(term.psi(tj, xj)) + as_vector(term.psi(tj1, xj1)))
            self.sums[i] = contrib if self.sums[i] is None else self.sums[i] + contrib

    def memory(self, t: float, d: int) -> Vector:
        out = np.zeros(d)
        for term, s in zip(self.terms, self.sums):
            if s is not None:
                out += np.atleast_2d(term.phi(t)) @ s
        return out


def _solve_on_grid(prob: ProblemSpec, grid: TimeGrid, rule: str, tol: float) -> Trajectory:
    nodes = grid.nodes
    hs = grid.steps
    n = grid.n_steps
    d = prob.dim
    states = np.empty((n + 1, d))
    states[0] = prob.x0
    sep = None
    if prob.f2 is not None and prob.f2.separable:
        sep = _SeparableAccumulator(prob.f2.separable, rule)
    for k in range(n):
        tk, tk1, hk = float(nodes[k]), float(nodes[k + 1]), float(hs[k])
        if sep is not None:
            mem = sep.memory(tk, d)
        else:
            mem = memory_term(prob, grid, states[: k + 1], k, rule)
        drift = _drift(prob, tk, states[k], mem)
        try:
            states[k + 1] = _guarded_step(prob, tk, tk1, hk, states[k], drift, tol)
        except StepTooCoarseError as exc:
            raise StepTooCoarseError(f"step k = {k}: {exc}") from exc
        if sep is not None:
            sep.advance(tk, states[k], tk1, states[k + 1], hk)
    return Trajectory.from_states(grid, states)


def _feasibility(prob: ProblemSpec, traj: Trajectory) -> float:
    return max(float(prob.set.distance(float(t), x))
               for t, x in zip(traj.grid.nodes, traj.states))


def _velocity_margin(traj: Trajectory, bounds: BoundsReport) -> float:
    speeds = traj.speeds()
    left_nodes = traj.grid.nodes[:-1]
    envelope = np.array([bounds.velocity_bound(float(t)) for t in left_nodes])
    return float(np.max(speeds - envelope))


def _sup_gap(coarse: Trajectory, fine: Trajectory) -> float:
    gaps = [float(np.linalg.norm(fine.interpolate(float(t)) - x))
            for t, x in zip(coarse.grid.nodes, coarse.states)]
    return max(gaps)


def _split_steps(grid: TimeGrid) -> TimeGrid:
    """Insert the midpoint of every step; coarse nodes are carried over exactly."""
    nodes = grid.nodes
    out = np.empty(2 * nodes.size - 1)
    out[0::2] = nodes
    out[1::2] = 0.5 * (nodes[:-1] + nodes[1:])
    return TimeGrid(grid.horizon, out)


def solve(prob: ProblemSpec, opts: SolveOptions) -> SolveReport:
    """Run the stepper over the grid; optionally refine by doubling.

    The refinement loop doubles the step count until the sup-node gap between
    successive trajectories drops below the target (a computable stand-in for
    the scheme's Cauchy property) or the doubling budget runs out.
    """
    grid = opts.make_grid(prob)
    bounds: Optional[BoundsReport] = None
    try:
        bounds = apriori_constants(prob)
    except DataMissingError:
        if opts.refine is not None:
            raise
    traj = _solve_on_grid(prob, grid, opts.memory_rule, opts.projection_tol)
    gap = None
    if opts.refine is not None:
        fine_grid = grid
        for _ in range(opts.refine.max_doublings):
            fine_grid = _split_steps(fine_grid)
            finer = _solve_on_grid(prob, fine_grid, opts.memory_rule, opts.projection_tol)
            gap = _sup_gap(traj, finer)
            traj = finer
            if gap <= opts.refine.target:
                break
    return SolveReport(
        trajectory=traj,
        feasibility=_feasibility(prob, traj),
        velocity_margin=None if bounds is None else _velocity_margin(traj, bounds),
        cauchy_gap=gap,
        bounds=bounds,
    )


@dataclass
class StabilityReport:
    """Sensitivity of the solution map to the initial state."""

    ratio: float
    certificate: Optional[float]
    passed: Optional[bool]


def _zero_rate(_t: float) -> float:
    return 0.0


def _lipschitz_pair(prob: ProblemSpec, eta: float):
    if prob.f1 is None:
        l1 = _zero_rate
    elif prob.f1.lipschitz_radius is None:
        return None
    else:
        l1 = prob.f1.lipschitz_radius(eta)
    if prob.f2 is None:
        l2 = _zero_rate
    elif prob.f2.lipschitz_radius is None:
        return None
    else:
        l2 = prob.f2.lipschitz_radius(eta)
    return l1, l2


def _certificate(prob: ProblemSpec, a: Vector, b: Vector,
                 traj_a: Trajectory, traj_b: Trajectory) -> Optional[float]:
    """exp of int (K + 1) with K = max(L1 + A/r, L2).

    A is the affine velocity envelope.  Its set-motion rate term integrates
    exactly to the variation modulus, which is pulled out of the quadrature so
    envelopes with integrable rate singularities (power-law set motion) still
    certify; the split only enlarges the exponent.
    """
    t0, t1 = prob.horizon.t_start, prob.horizon.t_end
    r = prob.prox_radius
    x0_norm = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)))
    try:
        eta = affine_state_bound(prob, x0_norm)
    except DataMissingError:
        if math.isfinite(r):
            return None
        eta = 1.000001 * max(float(np.max(np.linalg.norm(traj_a.states, axis=1))),
                             float(np.max(np.linalg.norm(traj_b.states, axis=1))), 1.0)
    pair = _lipschitz_pair(prob, eta)
    if pair is None:
        return None
    l1, l2 = pair

    if math.isfinite(r):
        if prob.f2 is not None and prob.f2.affine_growth is not None:
            g_fn, alpha_fn = prob.f2.affine_growth
        else:
            g_fn, alpha_fn = (lambda t, s: 0.0), (lambda t: 0.0)
        beta1 = (lambda t: 0.0) if prob.f1 is None else prob.f1.growth_beta1
        if beta1 is None:
            return None

        def smooth_envelope(t):
            tail = 0.0 if t == t0 else integrate(lambda s: g_fn(t, s), t0, t, what="kernel growth g")
            return (1.0 + eta) * float(np.asarray(beta1(t))) + tail \
                + t1 * float(np.asarray(alpha_fn(t))) * eta

        def k_hat(t):
            return max(float(l1(t)) + smooth_envelope(t) / r, float(l2(t))) + 1.0
        exponent = integrate(k_hat, t0, t1, what="stability exponent") \
            + prob.set.variation(t0, t1) / r
    else:
        def k_hat(t):
            return max(float(l1(t)), float(l2(t))) + 1.0
        exponent = integrate(k_hat, t0, t1, what="stability exponent")
    return math.exp(exponent)


def stability_probe(prob: ProblemSpec, opts: SolveOptions, a, b) -> StabilityReport:
    """Solve from two starts and compare their spread against the certificate."""
    a, b = as_vector(a), as_vector(b)
    sep = float(np.linalg.norm(a - b))
    if sep == 0.0:
        raise DegenerateInputError("stability ratio undefined for identical starts")
    base = replace(opts, refine=None)
    prob_a = replace(prob, x0=a)
    prob_b = replace(prob, x0=b)
    grid = base.make_grid(prob)
    traj_a = _solve_on_grid(prob_a, grid, base.memory_rule, base.projection_tol)
    traj_b = _solve_on_grid(prob_b, grid, base.memory_rule, base.projection_tol)
    spread = float(np.max(np.linalg.norm(traj_a.states - traj_b.states, axis=1)))
    ratio = spread / sep
    cert = _certificate(prob, a, b, traj_a, traj_b)
    passed = None
    if cert is not None:
        passed = ratio <= cert * (1.0 + 10.0 * base.projection_tol / sep)
    return StabilityReport(ratio=ratio, certificate=cert, passed=passed)
