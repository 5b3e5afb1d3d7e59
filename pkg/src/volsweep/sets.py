"""Moving-set implementations: distance/projection oracles and variation moduli.

Two families are provided.  `TranslatedFixedSet` moves a fixed convex base set
along a shift curve and projects in closed form.  `SublevelSet` describes the
set by finitely many inequalities g_i(t, x) <= 0 and projects with a small
SQP-style iteration (feasibility restoration, projection onto the constraint
linearisation, nonnegative multiplier fit), which is robust at desk scale where
m and d are small.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from .core import Vector, as_vector, require_finite
from .errors import (
    DataMissingError,
    DomainError,
    ProjectionFailureError,
    ReachExceededError,
)

_FD_STEP = 1e-6


# ---------------------------------------------------------------------------
# fixed convex bases with closed-form projections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrthantBase:
    """Nonnegative orthant.  Projection clamps componentwise; exact zeros stay zero."""

    dim: int

    def project(self, u: Vector) -> Vector:
        return np.maximum(u, 0.0)

    def distance(self, u: Vector) -> float:
        return float(np.linalg.norm(np.minimum(u, 0.0)))


@dataclass(frozen=True)
class BoxBase:
    lower: Vector
    upper: Vector

    def __post_init__(self):
        object.__setattr__(self, "lower", as_vector(self.lower))
        object.__setattr__(self, "upper", as_vector(self.upper))
        if np.any(self.lower > self.upper):
            raise DomainError("box needs lower <= upper componentwise")

    def project(self, u: Vector) -> Vector:
        return np.clip(u, self.lower, self.upper)

    def distance(self, u: Vector) -> float:
        return float(np.linalg.norm(u - self.project(u)))


@dataclass(frozen=True)
class BallBase:
    center: Vector
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")

    def project(self, u: Vector) -> Vector:
        d = u - self.center
        nrm = float(np.linalg.norm(d))
        if nrm <= self.radius:
            return u.copy()
        return self.center + d * (self.radius / nrm)

    def distance(self, u: Vector) -> float:
        return max(0.0, float(np.linalg.norm(u - self.center)) - self.radius)


@dataclass(frozen=True)
class HalfSpaceBase:
    """{u : normal . u <= offset}."""

    normal: Vector
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", as_vector(self.normal))
        if not np.linalg.norm(self.normal) > 0:
            raise DomainError("half-space normal must be nonzero")

    def project(self, u: Vector) -> Vector:
        a = self.normal
        excess = float(a @ u) - self.offset
        if excess <= 0:
            return u.copy()
        return u - (excess / float(a @ a)) * a

    def distance(self, u: Vector) -> float:
        return max(0.0, (float(self.normal @ u) - self.offset) / float(np.linalg.norm(self.normal)))


def project_polyhedron(u: Vector, a_matrix: np.ndarray, b: Vector,
                       tol: float = 1e-12, max_sweeps: int = 5000) -> tuple:
    """Nearest point of {z : A z <= b} from u, plus the multipliers.

    Solves the dual bound-constrained QP by cyclic coordinate descent; the
    primal point is recovered as u - A^T lambda.  Rows with zero norm are
    skipped (they constrain nothing or are infeasible by themselves).
    """
    A = np.atleast_2d(np.asarray(a_matrix, dtype=float))
    b = as_vector(b)
    m = A.shape[0]
    viol = A @ u - b
    lam = np.zeros(m)
    if m == 0 or float(np.max(viol)) <= 0.0:
        return u.copy(), lam
    Q = A @ A.T
    diag = np.diag(Q).copy()
    resid = -viol  # gradient of the dual objective at lambda
    for _ in range(max_sweeps):
        shift = 0.0
        for i in range(m):
            if diag[i] <= 1e-300:
                continue
            new = max(0.0, lam[i] - resid[i] / diag[i])
            d = new - lam[i]
            if d != 0.0:
                lam[i] = new
                resid += d * Q[:, i]
                shift = max(shift, abs(d) * math.sqrt(diag[i]))
        z = u - A.T @ lam
        if shift <= tol and float(np.max(A @ z - b)) <= tol:
            return z, lam
    z = u - A.T @ lam
    if float(np.max(A @ z - b)) <= 100 * tol:
        return z, lam
    raise ProjectionFailureError("polyhedron projection did not converge (infeasible A z <= b?)")


@dataclass(frozen=True)
class PolyhedronBase:
    """{u : A u <= b} for a small number of rows."""

    a_matrix: np.ndarray
    b: Vector

    def __post_init__(self):
        object.__setattr__(self, "a_matrix", np.atleast_2d(np.asarray(self.a_matrix, dtype=float)))
        object.__setattr__(self, "b", as_vector(self.b))

    def project(self, u: Vector) -> Vector:
        z, _ = project_polyhedron(u, self.a_matrix, self.b)
        return z

    def distance(self, u: Vector) -> float:
        return float(np.linalg.norm(u - self.project(u)))


# ---------------------------------------------------------------------------
# moving sets
# ---------------------------------------------------------------------------

class MovingSet:
    """Contract shared by all time-indexed sets.

    Implementations are immutable; distance and project are pure and safe to
    call from concurrent solves.
    """

    def distance(self, t: float, y: Vector) -> float:
        raise NotImplementedError

    def project(self, t: float, y: Vector, tol: float = 1e-10) -> Vector:
        raise NotImplementedError

    def variation(self, s: float, t: float) -> float:
        """Bound |v(t) - v(s)| with C(t) contained in C(s) + |v(s)-v(t)| * unit ball."""
        raise NotImplementedError

    def variation_rate(self, t: float) -> float:
        """Pointwise |dv/dt|; finite-difference fallback on the modulus."""
        h = _FD_STEP
        return self.variation(t - h, t + h) / (2.0 * h)

    def prox_radius(self) -> float:
        raise NotImplementedError

    def contains(self, t: float, y: Vector, tol: float = 1e-10) -> bool:
        return self.distance(t, y) <= tol


@dataclass(frozen=True)
class TranslatedFixedSet(MovingSet):
    """C(t) = shift(t) + K for a fixed convex base K; projections are exact.

    shift_modulus(s, t) must return the arc length of the shift over [s, t]
    (the integral of ||shift'||); it is stored as a function because it is not
    generally computable from the shift alone.
    """

    base: object
    shift: Callable[[float], Vector]
    shift_modulus: Callable[[float], float] = None  # type: ignore[assignment]
    shift_rate: Optional[Callable[[float], float]] = None

    def _w(self, t: float) -> Vector:
        return require_finite(as_vector(self.shift(t)), "shift")

    def distance(self, t: float, y: Vector) -> float:
        return float(self.base.distance(as_vector(y) - self._w(t)))

    def project(self, t: float, y: Vector, tol: float = 1e-10) -> Vector:
        w = self._w(t)
        return w + self.base.project(as_vector(y) - w)

    def variation(self, s: float, t: float) -> float:
        if s == t:
            return 0.0
        lo, hi = (s, t) if s < t else (t, s)
        if self.shift_modulus is None:
            raise DataMissingError("translated set has no shift arc-length modulus")
        return max(0.0, float(self.shift_modulus(lo, hi)))

    def variation_rate(self, t: float) -> float:
        if self.shift_rate is not None:
            return abs(float(self.shift_rate(t)))
        h = _FD_STEP
        return float(np.linalg.norm(self._w(t + h) - self._w(t - h))) / (2.0 * h)

    def prox_radius(self) -> float:
        return math.inf


def static_set(base, dim: int) -> TranslatedFixedSet:
    """Convenience wrapper for a set that does not move."""
    zero = np.zeros(dim)
    return TranslatedFixedSet(base, shift=lambda t: zero, shift_modulus=lambda s, t: 0.0,
                              shift_rate=lambda t: 0.0)


@dataclass(frozen=True)
class SublevelSet(MovingSet):
    """C(t) = {x : g_i(t, x) <= 0, i = 1..m} with user-supplied gradients.

    gamma is the hypomonotonicity constant of the gradients, delta the uniform
    Slater margin along the witness direction, rho the differentiability
    neighbourhood radius; they are user data (a sampler can refute but not
    certify them).  variation_w controls time regularity through
    |g_i(t,x) - g_i(s,x)| <= |w(t) - w(s)|.
    """

    g: Callable[[float, Vector], Vector]
    grad: Callable[[float, Vector], np.ndarray]
    gamma: Optional[float] = None
    delta: Optional[float] = None
    rho: Optional[float] = None
    witness: Optional[Vector] = None
    variation_w: Optional[Callable[[float], float]] = None
    variation_w_rate: Optional[Callable[[float], float]] = None

    # -- contract surface ---------------------------------------------------

    def constraint_values(self, t: float, y: Vector) -> Vector:
        return require_finite(np.atleast_1d(np.asarray(self.g(t, as_vector(y)), dtype=float)), "g")

    def constraint_grads(self, t: float, y: Vector) -> np.ndarray:
        G = np.atleast_2d(np.asarray(self.grad(t, as_vector(y)), dtype=float))
        return require_finite(G, "grad g")

    def prox_radius(self) -> float:
        return prox_radius_sublevel(self)

    def _prox_radius_or_none(self) -> Optional[float]:
        try:
            return prox_radius_sublevel(self)
        except DataMissingError:
            return None

    def variation(self, s: float, t: float) -> float:
        return variation_sublevel(self, s, t)

    def variation_rate(self, t: float) -> float:
        if self.delta is None:
            raise DataMissingError("sublevel set has no Slater constant delta")
        if self.variation_w_rate is not None:
            return abs(float(self.variation_w_rate(t))) / self.delta
        if self.variation_w is None:
            raise DataMissingError("sublevel set has no variation function w")
        h = _FD_STEP
        return abs(float(self.variation_w(t + h)) - float(self.variation_w(t - h))) / (2.0 * h * self.delta)

    def contains(self, t: float, y: Vector, tol: float = 1e-10) -> bool:
        return float(np.max(self.constraint_values(t, y))) <= tol

    def distance(self, t: float, y: Vector) -> float:
        y = as_vector(y)
        if float(np.max(self.constraint_values(t, y))) <= 0.0:
            return 0.0
        return float(np.linalg.norm(y - self.project(t, y)))

    # -- inner solver ---------------------------------------------------------

    def _restore(self, t: float, u: Vector, max_iter: int = 60) -> Vector:
        """Damped Newton on the most-violated constraint along its gradient."""
        z = as_vector(u).astype(float).copy()
        roundoff = 1e-13 * (1.0 + float(np.linalg.norm(z)))
        for _ in range(max_iter):
            gz = self.constraint_values(t, z)
            i = int(np.argmax(gz))
            v = float(gz[i])
            if v <= 0.0:
                return z
            gr = self.constraint_grads(t, z)[i]
            n2 = float(gr @ gr)
            if n2 <= 1e-300:
                raise ProjectionFailureError("zero gradient on a violated constraint")
            if v <= roundoff:
                # residual at rounding scale; a slight overshoot crosses the boundary
                z_over = z - 1.02 * (v / n2) * gr
                if float(np.max(self.constraint_values(t, z_over))) <= 0.0:
                    return z_over
                return z
            full = (v / n2) * gr
            tau = 1.0
            while tau >= 1e-4:
                z_try = z - tau * full
                v_try = float(np.max(self.constraint_values(t, z_try)))
                if v_try <= 0.0 or v_try <= (1.0 - 0.25 * tau) * v:
                    break
                tau *= 0.5
            z = z_try
        if float(np.max(self.constraint_values(t, z))) <= 1e-11:
            return z
        raise ProjectionFailureError("feasibility restoration did not converge")

    def _multipliers(self, t: float, y: Vector, z: Vector, act_tol: float = 1e-8):
        """Nonnegative multiplier fit on the constraints active at z."""
        gz = self.constraint_values(t, z)
        active = np.flatnonzero(gz >= -act_tol)
        mu = np.zeros(gz.size)
        if active.size == 0:
            return mu, float(np.linalg.norm(y - z))
        G = self.constraint_grads(t, z)[active]      # (|A|, d)
        sol, resid = nnls(G.T, y - z)
        mu[active] = sol
        return mu, float(resid)

    def _iterate(self, t: float, y: Vector, z0: Vector, tol: float, max_iter: int) -> Vector:
        """Projection onto successive constraint linearisations, pulled back to feasibility."""
        z = z0.copy()
        for _ in range(max_iter):
            gz = self.constraint_values(t, z)
            G = self.constraint_grads(t, z)
            w, _ = project_polyhedron(y, G, G @ z - gz, tol=min(tol, 1e-12))
            if float(np.max(self.constraint_values(t, w))) > 0.0:
                w = self._restore(t, w)
            move = float(np.linalg.norm(w - z))
            if float(np.linalg.norm(w - y)) > float(np.linalg.norm(z - y)) + tol:
                # curvature overshoot: average back toward the previous iterate
                w = self._restore(t, 0.5 * (w + z))
                move = float(np.linalg.norm(w - z))
            z = w
            if move <= tol:
                break
        return z

    def project(self, t: float, y: Vector, tol: float = 1e-10, max_iter: int = 200) -> Vector:
        """Nearest point of C(t), valid inside the prox-radius tube.

        Raises ReachExceededError when the restoration upper bound on the
        distance already reaches the prox radius (uniqueness not guaranteed
        there), and ProjectionFailureError when the iteration stalls without
        meeting the stationarity tolerance.
        """
        y = as_vector(y)
        if float(np.max(self.constraint_values(t, y))) <= 0.0:
            return y.copy()
        z = self._restore(t, y)
        r = self._prox_radius_or_none()
        if r is not None and math.isfinite(r) and float(np.linalg.norm(y - z)) >= r:
            raise ReachExceededError(
                f"distance upper bound {float(np.linalg.norm(y - z)):.4g} at t={t} reaches "
                f"the prox radius {r:.4g}; nearest point may not be unique"
            )
        z = self._iterate(t, y, z, tol, max_iter)
        z = self._escape(t, y, z, tol)
        mu, stat = self._multipliers(t, y, z)
        if stat > max(math.sqrt(tol), 1e3 * tol) * max(1.0, float(np.linalg.norm(y - z))):
            raise ProjectionFailureError(
                f"projection stationarity residual {stat:.3e} above tolerance at t={t}"
            )
        return z

    def _escape(self, t: float, y: Vector, z: Vector, tol: float) -> Vector:
        """Probe directions tangent to the active constraints for a closer point.

        First-order iterations can stall on saddles of the distance function
        (symmetric geometries).  Saddles only compete beyond the prox radius,
        where nearest points stop being unique, so the probes run only in the
        constants-free diagnostic mode; inside a known tube the iterate is
        already the unique nearest point.
        """
        if self._prox_radius_or_none() is not None:
            return z
        dist = float(np.linalg.norm(y - z))
        if dist <= 100 * tol:
            return z
        gz = self.constraint_values(t, z)
        G = self.constraint_grads(t, z)[gz >= -1e-8]
        if G.shape[0] == 0 or G.shape[0] >= z.size:
            return z
        _, sv, vt = np.linalg.svd(G, full_matrices=True)
        rank = int(np.sum(sv > 1e-12 * max(sv[0], 1.0))) if sv.size else 0
        null = vt[rank:]
        if null.shape[0] == 0:
            return z
        best = z
        step = 0.3 * dist
        for direction in null[:2]:
            for sign in (1.0, -1.0):
                try:
                    probe = self._restore(t, z + sign * step * direction)
                    cand = self._iterate(t, y, probe, tol, 60)
                except ProjectionFailureError:
                    continue
                if float(np.linalg.norm(cand - y)) < float(np.linalg.norm(best - y)) - tol:
                    best = cand
        return best


# ---------------------------------------------------------------------------
# prox-regularity toolkit
# ---------------------------------------------------------------------------

def project_translated(moving: TranslatedFixedSet, t: float, y: Vector) -> Vector:
    return moving.project(t, y)


def project_sublevel(moving: SublevelSet, t: float, y: Vector, tol: float = 1e-10) -> Vector:
    return moving.project(t, y, tol=tol)


def prox_radius_sublevel(moving: SublevelSet) -> float:
    """min(rho, delta/gamma); gamma = 0 encodes the convex case delta/gamma = +inf."""
    if moving.gamma is None or moving.delta is None or moving.rho is None:
        raise DataMissingError("prox radius needs gamma, delta and rho")
    if moving.delta <= 0 or moving.rho <= 0 or moving.gamma < 0:
        raise DomainError("prox-radius constants must be positive (gamma >= 0)")
    ratio = math.inf if moving.gamma == 0.0 else moving.delta / moving.gamma
    return min(moving.rho, ratio)


def variation_sublevel(moving: SublevelSet, s: float, t: float) -> float:
    """|w(t) - w(s)| / delta."""
    if moving.variation_w is None:
        raise DataMissingError("variation needs the time-regularity function w")
    if moving.delta is None or moving.delta <= 0:
        raise DataMissingError("variation needs a positive Slater constant delta")
    return abs(float(moving.variation_w(t)) - float(moving.variation_w(s))) / moving.delta


@dataclass(frozen=True)
class SlaterReport:
    """Sampled check of the uniform constraint-qualification margin."""

    margin: float
    passed: bool
    worst_time: float
    worst_point: Vector
    worst_index: int


def check_uniform_slater(moving: SublevelSet, sample_times: Sequence[float],
                         sample_points: Sequence[Vector]) -> SlaterReport:
    """Max over samples of <grad g_i(t,x), witness> + delta; PASS iff <= 0 everywhere."""
    if moving.witness is None or moving.delta is None:
        raise DataMissingError("Slater check needs the witness direction and delta")
    y = as_vector(moving.witness)
    worst = (-math.inf, math.nan, None, -1)
    for t in sample_times:
        for x in sample_points:
            inner = moving.constraint_grads(t, as_vector(x)) @ y
            i = int(np.argmax(inner))
            val = float(inner[i]) + moving.delta
            if val > worst[0]:
                worst = (val, float(t), as_vector(x), i)
    margin, wt, wx, wi = worst
    return SlaterReport(margin=margin, passed=margin <= 0.0,
                        worst_time=wt, worst_point=wx, worst_index=wi)


def sample_feasible(moving: MovingSet, t: float, center: Vector, spread: float,
                    count: int, rng: np.random.Generator) -> list:
    """Feasible points near `center` obtained by projecting Gaussian draws."""
    center = as_vector(center)
    out = []
    while len(out) < count:
        cand = center + spread * rng.standard_normal(center.size)
        try:
            out.append(moving.project(t, cand))
        except (ReachExceededError, ProjectionFailureError):
            continue
    return out
