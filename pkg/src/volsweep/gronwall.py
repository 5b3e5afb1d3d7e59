"""Executable bound evaluators for three differential-inequality envelopes.

Each evaluator returns the explicit envelope value at a requested time, with
all integrals done by doubling composite Simpson (relative tolerance 1e-8,
floor of 64 panels).  They are used as certificates by tests and by the
solver's reporting; none of them feeds back into the time stepping itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Horizon, ProblemSpec
from .errors import DataMissingError, DomainError, EvaluationError
from .quad import integrate, prefix_simpson, refine_profile, sample

MASS_LIMIT = 0.25  # per-window cap on the forcing mass


@dataclass(frozen=True)
class GronwallInput:
    """Data of the scalar inequality (1-alpha) w' <= a w + b w^alpha."""

    horizon: Horizon
    a: Callable[[float], float]
    b: Callable[[float], float]
    alpha_exponent: float = 0.0
    w0: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha_exponent < 1.0:
            raise DomainError("alpha exponent must lie in [0, 1)")
        if self.w0 < 0.0:
            raise DomainError("w0 must be nonnegative")


@dataclass(frozen=True)
class GronwallLikeInput:
    """Data of rho' <= eps(t) + eps_const + K1 rho + K2 sqrt(rho) * int sqrt(rho).

    The envelope is continuous in eps_const and is proved for every positive
    value; the tiny default keeps its contribution below other error sources.
    """

    horizon: Horizon
    K1: Callable[[float], float]
    K2: Callable[[float], float]
    eps_fn: Callable[[float], float]
    eps_const: float = 1e-12
    rho0: float = 0.0

    def __post_init__(self):
        if not self.eps_const > 0.0:
            raise DomainError("eps_const must be positive")
        if self.rho0 < 0.0:
            raise DomainError("rho0 must be nonnegative")


def _grid_samples(f, ts, what, nonneg=False):
    ys = sample(f, ts)
    if not np.all(np.isfinite(ys)):
        raise EvaluationError(f"non-finite samples of {what}")
    if nonneg and np.min(ys) < 0.0:
        raise DomainError(f"{what} must be nonnegative, sampled minimum {np.min(ys):.3e}")
    return ys


def gronwall_bound(inp: GronwallInput, t: float) -> float:
    """Envelope of w(t): [w0^(1-a) exp(int a) + int exp(int_s^t a) b]^(1/(1-a))."""
    inp.horizon.check(t)
    t0 = inp.horizon.t_start
    q = 1.0 - inp.alpha_exponent
    if t == t0:
        return inp.w0

    def on_grid(n):
        ts = np.linspace(t0, t, n + 1)
        h = (t - t0) / n
        a = _grid_samples(inp.a, ts, "a")
        b = _grid_samples(inp.b, ts, "b", nonneg=True)
        A = prefix_simpson(a, h)
        inner = np.exp(A[-1] - A) * b
        core = inp.w0 ** q * math.exp(A[-1]) + prefix_simpson(inner, h)[-1]
        return np.array([core])

    core = float(refine_profile(on_grid)[0])
    return max(core, 0.0) ** (1.0 / q)


def gronwall_integral_bound(horizon: Horizon, a, b1, b2, rho0: float, t: float) -> float:
    """Envelope of rho(t) under rho' <= a + b1 rho + b2 int rho, via b = max(b1, b2)."""
    horizon.check(t)
    if rho0 < 0.0:
        raise DomainError("rho0 must be nonnegative")
    t0 = horizon.t_start
    if t == t0:
        return rho0

    def on_grid(n):
        ts = np.linspace(t0, t, n + 1)
        h = (t - t0) / n
        av = _grid_samples(a, ts, "a", nonneg=True)
        bv = np.maximum(_grid_samples(b1, ts, "b1", nonneg=True),
                        _grid_samples(b2, ts, "b2", nonneg=True)) + 1.0
        B = prefix_simpson(bv, h)
        val = rho0 * math.exp(B[-1]) + prefix_simpson(np.exp(B[-1] - B) * av, h)[-1]
        return np.array([val])

    return float(refine_profile(on_grid)[0])


def gronwall_like_bound(inp: GronwallLikeInput, t: float) -> float:
    """Envelope of sqrt(rho(t)): the four-term bound with K = max(K1/2, K2/2)."""
    inp.horizon.check(t)
    t0 = inp.horizon.t_start
    eps = inp.eps_const
    if t == t0:
        return math.sqrt(inp.rho0 + eps)

    def on_grid(n):
        ts = np.linspace(t0, t, n + 1)
        h = (t - t0) / n
        K = np.maximum(_grid_samples(inp.K1, ts, "K1", nonneg=True),
                       _grid_samples(inp.K2, ts, "K2", nonneg=True)) / 2.0
        ev = _grid_samples(inp.eps_fn, ts, "eps", nonneg=True)
        E = prefix_simpson(K + 1.0, h)
        lam = np.sqrt(prefix_simpson(ev, h) + eps)
        growth = np.exp(E[-1] - E)
        term1 = math.sqrt(inp.rho0 + eps) * math.exp(E[-1])
        term2 = 0.5 * math.sqrt(eps) * prefix_simpson(growth, h)[-1]
        term3 = 2.0 * (lam[-1] - math.sqrt(eps) * math.exp(E[-1]))
        term4 = 2.0 * prefix_simpson((K + 1.0) * growth * lam, h)[-1]
        return np.array([term1 + term2 + term3 + term4])

    return float(refine_profile(on_grid)[0])


# ---------------------------------------------------------------------------
# a priori constants for a full problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundsReport:
    """Window partition, state bounds and pointwise velocity envelopes.

    window_edges partitions the horizon so each window's forcing mass
    int [beta1 + int beta2] stays strictly below 1/4; window_state_bounds[i]
    bounds the node norms on window i, chained by feeding each bound in as the
    next window's starting norm.  velocity_bound is the growth-data envelope
    on the drift-plus-sweep speed; affine fields are present only when the
    kernel declares affine growth data.
    """

    horizon: Horizon
    window_edges: np.ndarray
    window_state_bounds: np.ndarray
    forcing_mass: float
    velocity_bound: Callable[[float], float]
    affine_state_bound: Optional[float] = None
    affine_velocity_bound: Optional[Callable[[float], float]] = None

    @property
    def state_bound(self) -> float:
        return float(np.max(self.window_state_bounds))

    @property
    def single_window(self) -> bool:
        return self.window_edges.size == 2

    def window_for(self, t: float) -> int:
        i = int(np.searchsorted(self.window_edges, t, side="right")) - 1
        return min(max(i, 0), self.window_state_bounds.size - 1)


def _growth_beta1(prob: ProblemSpec):
    if prob.f1 is None:
        return lambda t: np.zeros_like(np.asarray(t, dtype=float)) + 0.0
    if prob.f1.growth_beta1 is None:
        raise DataMissingError("velocity bounds need growth_beta1 on f1")
    return prob.f1.growth_beta1

def _growth_beta2(prob: ProblemSpec):
    if prob.f2 is None:
        return None
    if prob.f2.growth_beta2 is not None:
        return prob.f2.growth_beta2
    if prob.f2.affine_growth is not None:
        # g + alpha*||x|| <= max(g, alpha) * (1 + ||x||): derive the product form
        g_fn, alpha_fn = prob.f2.affine_growth
        def derived(t, s):
            return np.maximum(np.asarray(g_fn(t, s), dtype=float),
                              np.asarray(alpha_fn(t), dtype=float))
        return derived
    raise DataMissingError("velocity bounds need growth_beta2 (or affine growth) on f2")


def _beta2_tail(beta2, t0: float, t: float) -> float:
    if beta2 is None or t == t0:
        return 0.0
    return max(0.0, integrate(lambda s: beta2(t, s), t0, t, what="beta2"))


def _mass_cumulative(prob: ProblemSpec, beta1, beta2):
    """Dense cumulative of the forcing mass beta1(tau) + int beta2(tau, s) ds."""
    t0, t1 = prob.horizon.t_start, prob.horizon.t_end
    store = {}

    def on_grid(n):
        ts = np.linspace(t0, t1, n + 1)
        m = np.asarray(sample(beta1, ts), dtype=float).copy()
        if np.min(m) < 0.0:
            raise DomainError("beta1 must be nonnegative")
        if beta2 is not None:
            m += np.array([_beta2_tail(beta2, t0, float(tau)) for tau in ts])
        if not np.all(np.isfinite(m)):
            raise EvaluationError("forcing mass not integrable on the horizon")
        cum = prefix_simpson(m, (t1 - t0) / n)
        store["ts"], store["cum"] = ts, cum
        return np.array([cum[-1]])

    refine_profile(on_grid, start=64, max_panels=1 << 12)
    return store["ts"], store["cum"]


def _partition(ts, cum):
    total = float(cum[-1])
    if total < MASS_LIMIT:
        return np.array([ts[0], ts[-1]]), total
    p = int(math.floor(total / MASS_LIMIT)) + 1
    if total / p >= MASS_LIMIT:
        p += 1
    targets = total * np.arange(1, p) / p
    inner = np.interp(targets, cum, ts)
    edges = np.concatenate([[ts[0]], inner, [ts[-1]]])
    if np.any(np.diff(edges) <= 0):
        raise EvaluationError("forcing mass too concentrated to partition into windows")
    return edges, total


def _affine_growth_pair(prob: ProblemSpec):
    if prob.f2 is None:
        return (lambda t, s: 0.0), (lambda t: 0.0)
    if prob.f2.affine_growth is None:
        raise DataMissingError("affine bounds need kernel growth data (g, alpha)")
    return prob.f2.affine_growth


def affine_state_bound(prob: ProblemSpec, x0_norm: Optional[float] = None) -> float:
    """State-norm envelope from the affine kernel growth form ||f2|| <= g + alpha ||x||.

    The optional x0_norm overrides the starting norm so the same envelope can
    cover a family of initial states (stability certificates).
    """
    beta1 = _growth_beta1(prob)
    g_fn, alpha_fn = _affine_growth_pair(prob)
    t0, t1 = prob.horizon.t_start, prob.horizon.t_end

    def b_plus_one(tau):
        return 2.0 * max(float(np.asarray(beta1(tau))), float(np.asarray(alpha_fn(tau)))) + 1.0

    B = integrate(b_plus_one, t0, t1, what="2*max(beta1, alpha) + 1")
    var_total = prob.set.variation(t0, t1)

    def forcing_row(s):
        inner = integrate(lambda tau: g_fn(s, tau), t0, t1, what="kernel growth g")
        return 2.0 * float(np.asarray(beta1(s))) + 2.0 * inner

    forcing = integrate(forcing_row, t0, t1, what="affine forcing")
    x0n = float(np.linalg.norm(prob.x0)) if x0_norm is None else float(x0_norm)
    return math.exp(B) * (x0n + var_total + forcing)


def apriori_constants(prob: ProblemSpec) -> BoundsReport:
    """Window partition, chained state bounds and velocity envelopes from growth data."""
    beta1 = _growth_beta1(prob)
    beta2 = _growth_beta2(prob)
    t0, t1 = prob.horizon.t_start, prob.horizon.t_end
    ts, cum = _mass_cumulative(prob, beta1, beta2)
    edges, total = _partition(ts, cum)

    bounds = []
    start_norm = float(np.linalg.norm(prob.x0))
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = 2.0 * (start_norm + prob.set.variation(float(lo), float(hi)) + 0.5)
        bounds.append(m)
        start_norm = m
    window_state_bounds = np.array(bounds)

    def velocity_bound(t: float, _edges=edges, _wb=window_state_bounds) -> float:
        i = min(max(int(np.searchsorted(_edges, t, side="right")) - 1, 0), _wb.size - 1)
        m = _wb[i]
        return (1.0 + m) * (float(np.asarray(beta1(t))) + _beta2_tail(beta2, t0, t)) \
            + prob.set.variation_rate(t)

    affine_state = None
    affine_velocity = None
    if prob.f2 is None or prob.f2.affine_growth is not None:
        g_fn, alpha_fn = _affine_growth_pair(prob)
        affine_state = affine_state_bound(prob)

        def _affine_velocity(t: float, _m=affine_state) -> float:
            tail = 0.0 if t == t0 else integrate(lambda s: g_fn(t, s), t0, t, what="kernel growth g")
            return prob.set.variation_rate(t) + (1.0 + _m) * float(np.asarray(beta1(t))) \
                + tail + t1 * float(np.asarray(alpha_fn(t))) * _m
        affine_velocity = _affine_velocity

    return BoundsReport(
        horizon=prob.horizon,
        window_edges=edges,
        window_state_bounds=window_state_bounds,
        forcing_mass=total,
        velocity_bound=velocity_bound,
        affine_state_bound=affine_state,
        affine_velocity_bound=affine_velocity,
    )
