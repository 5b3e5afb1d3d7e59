"""Diode-circuit front-end.

Compiles the two-loop RLC network with ideal diodes and a current source into
a sweeping process on a translated nonnegative orthant: the source shifts the
first coordinate's constraint, inductor/resistor coupling gives the constant
single-time matrix, and the time-varying capacitors give the memory kernel
plus a source forcing term.  Diode voltages are recovered from the trajectory
as complementarity multipliers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Horizon, KernelSpec, PerturbationSpec, ProblemSpec, SeparableTerm, Trajectory, Vector, as_vector
from .errors import InvalidCircuitError
from .nidcs import NidcsSpec, recover_multiplier
from .sets import OrthantBase, SublevelSet, TranslatedFixedSet

_CAP_SAMPLES = 2048


@dataclass(frozen=True)
class CircuitParams:
    """Two resistors, two inductors, three time-varying capacitors, one source.

    Capacitance functions must be continuous and nonvanishing on the horizon.
    source_variation(s, t) is the arc length of the source over [s, t] (the
    integral of |di/dt|), used as the moving set's variation modulus.
    """

    r1: float
    r2: float
    l1: float
    l2: float
    c1: Callable[[float], float]
    c2: Callable[[float], float]
    c3: Callable[[float], float]
    source: Callable[[float], float]
    source_variation: Callable[[float, float], float]
    horizon: Horizon
    x0: Vector
    source_rate: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        object.__setattr__(self, "x0", as_vector(self.x0))
        if self.x0.size != 2:
            raise InvalidCircuitError("circuit state is the pair of loop currents")
        if self.l1 <= 0 or self.l2 <= 0:
            raise InvalidCircuitError("inductances must be positive")
        if self.r1 < 0 or self.r2 < 0:
            raise InvalidCircuitError("resistances must be nonnegative")


def _opnorm_2x2(a11, a12, a21, a22):
    """Largest singular value of a 2x2 matrix, vectorised over the entries."""
    fro2 = a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22
    det = a11 * a22 - a12 * a21
    disc = np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0))
    return np.sqrt(0.5 * (fro2 + disc))


@dataclass(frozen=True)
class CircuitMatrices:
    a1: np.ndarray                                   # constant 2x2 coupling
    a2: Callable[[float], np.ndarray]                # capacitive memory matrix
    w: Callable[[float], Vector]                     # orthant shift (source, 0)
    forcing: Callable[[float, float], Vector]        # source forcing of the kernel


def circuit_matrices(p: CircuitParams) -> CircuitMatrices:
    a1 = np.array([[(p.r1 + p.r2) / p.l1, -p.r2 / p.l1],
                   [-p.r2 / p.l2, (p.r1 + p.r2) / p.l2]])

    def a2(t: float) -> np.ndarray:
        c1, c2, c3 = float(p.c1(t)), float(p.c2(t)), float(p.c3(t))
        return np.array([[1.0 / (p.l1 * c1) + 1.0 / (p.l1 * c3), -1.0 / (p.l1 * c3)],
                         [-1.0 / (p.l2 * c3), 1.0 / (p.l2 * c2) + 1.0 / (p.l2 * c3)]])

    def w(t: float) -> Vector:
        return np.array([float(p.source(t)), 0.0])

    def forcing(t: float, s: float) -> Vector:
        return np.array([float(p.source(s)) / (p.l1 * float(p.c1(t))), 0.0])

    return CircuitMatrices(a1=a1, a2=a2, w=w, forcing=forcing)


def _check_capacitances(p: CircuitParams):
    ts = np.linspace(p.horizon.t_start, p.horizon.t_end, _CAP_SAMPLES + 1)
    for name, fn in (("C1", p.c1), ("C2", p.c2), ("C3", p.c3)):
        vals = np.array([float(fn(float(t))) for t in ts])
        if not np.all(np.isfinite(vals)):
            raise InvalidCircuitError(f"{name} is not finite on the horizon")
        if np.any(vals == 0.0) or np.any(np.sign(vals[:-1]) != np.sign(vals[1:])):
            raise InvalidCircuitError(f"{name} crosses zero on the sampled horizon")


def build_circuit_problem(p: CircuitParams) -> ProblemSpec:
    """Sweeping process for the circuit, with growth and Lipschitz data filled in.

    The kernel is declared separable (capacitive part acting on the state,
    source forcing independent of it), so solves cost one kernel update per
    step instead of a full history sweep.
    """
    _check_capacitances(p)
    mats = circuit_matrices(p)
    a1_norm = float(np.linalg.norm(mats.a1, 2))

    moving = TranslatedFixedSet(
        base=OrthantBase(2),
        shift=mats.w,
        shift_modulus=p.source_variation,
        shift_rate=p.source_rate,
    )

    f1 = PerturbationSpec(
        eval=lambda t, x, _a=mats.a1: _a @ x,
        growth_beta1=lambda t, _n=a1_norm: np.full_like(np.asarray(t, dtype=float), _n) + 0.0,
        lipschitz_radius=lambda eta, _n=a1_norm: (lambda t: _n),
    )

    def alpha(t):
        tt = np.asarray(t, dtype=float)
        c1 = np.asarray(p.c1(tt) if tt.ndim else p.c1(float(tt)), dtype=float)
        c2 = np.asarray(p.c2(tt) if tt.ndim else p.c2(float(tt)), dtype=float)
        c3 = np.asarray(p.c3(tt) if tt.ndim else p.c3(float(tt)), dtype=float)
        return _opnorm_2x2(1.0 / (p.l1 * c1) + 1.0 / (p.l1 * c3), -1.0 / (p.l1 * c3),
                           -1.0 / (p.l2 * c3), 1.0 / (p.l2 * c2) + 1.0 / (p.l2 * c3))

    def kernel_growth(t, s):
        src = np.abs(np.asarray(p.source(np.asarray(s, dtype=float))
                                if np.ndim(s) else p.source(float(s)), dtype=float))
        return src / (p.l1 * abs(float(p.c1(float(t)))))

    def beta2(t, s):
        return np.maximum(kernel_growth(t, s), alpha(t))

    f2 = KernelSpec(
        eval=lambda t, s, x, _m=mats: _m.a2(t) @ x + _m.forcing(t, s),
        growth_beta2=beta2,
        affine_growth=(kernel_growth, alpha),
        lipschitz_radius=lambda eta: (lambda t: float(alpha(float(t)))),
        separable=(
            SeparableTerm(phi=mats.a2, psi=lambda s, x: x),
            SeparableTerm(phi=lambda t: np.eye(2) / (p.l1 * float(p.c1(t))),
                          psi=lambda s, x, _w=mats.w: _w(s)),
        ),
    )

    i0 = float(p.source(p.horizon.t_start))
    if p.x0[0] < i0 - 1e-9 or p.x0[1] < -1e-9:
        raise InvalidCircuitError(
            f"initial currents {p.x0.tolist()} violate the diode constraints at t_start "
            f"(need x1 >= {i0}, x2 >= 0)"
        )
    return ProblemSpec(horizon=p.horizon, set=moving, f1=f1, f2=f2, x0=p.x0)


def diode_constraint_set(p: CircuitParams) -> SublevelSet:
    """The orthant constraints as inequalities, for multiplier recovery."""
    t0 = p.horizon.t_start

    def g(t, x):
        return np.array([float(p.source(t)) - x[0], -x[1]])

    grads = np.array([[-1.0, 0.0], [0.0, -1.0]])
    return SublevelSet(
        g=g,
        grad=lambda t, x: grads,
        gamma=0.0,
        delta=1.0 / math.sqrt(2.0),
        rho=math.inf,
        witness=np.array([1.0, 1.0]) / math.sqrt(2.0),
        variation_w=lambda t: (1.0 / math.sqrt(2.0)) * p.source_variation(t0, t),
        variation_w_rate=None if p.source_rate is None
        else (lambda t: (1.0 / math.sqrt(2.0)) * p.source_rate(t)),
    )


@dataclass(frozen=True)
class DiodeWaveforms:
    """Per-node circuit observables; multipliers repeat the final step on the last node."""

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    i_src: np.ndarray
    id1: np.ndarray
    id2: np.ndarray
    vd1: np.ndarray
    vd2: np.ndarray
    comp_gap1: np.ndarray
    comp_gap2: np.ndarray


def diode_waveforms(p: CircuitParams, traj: Trajectory,
                    rule: str = "left-rectangle") -> DiodeWaveforms:
    """Diode currents, recovered voltages and complementarity gaps along a run."""
    prob = build_circuit_problem(p)
    spec = NidcsSpec(horizon=p.horizon, f1=prob.f1, f2=prob.f2,
                     set=diode_constraint_set(p), x0=p.x0)
    path = recover_multiplier(spec, traj, rule=rule)
    ts = traj.grid.nodes
    x1 = traj.states[:, 0]
    x2 = traj.states[:, 1]
    src = np.array([float(p.source(float(t))) for t in ts])
    z = np.vstack([path.z, path.z[-1]])  # repeat last step for the closing node
    id1 = x1 - src
    id2 = x2
    return DiodeWaveforms(
        t=ts, x1=x1, x2=x2, i_src=src,
        id1=id1, id2=id2,
        vd1=-z[:, 0], vd2=-z[:, 1],
        comp_gap1=np.abs(z[:, 0] * id1),
        comp_gap2=np.abs(z[:, 1] * id2),
    )
