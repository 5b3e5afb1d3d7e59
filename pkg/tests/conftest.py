import math
from pathlib import Path

import numpy as np
import pytest

import volsweep as vs

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def config_path(name: str) -> str:
    return str(CONFIG_DIR / name)


def all_config_paths():
    return sorted(CONFIG_DIR.glob("*.toml"))


# ---------------------------------------------------------------------------
# problem builders shared across test modules
# ---------------------------------------------------------------------------

def halfline_problem(x0=0.0, t_start=0.0, t_end=1.0):
    """C(t) = [t, inf), no forcing; closed form x(t) = max(x0, t)."""
    moving = vs.TranslatedFixedSet(
        base=vs.OrthantBase(1),
        shift=lambda t: np.array([t]),
        shift_modulus=lambda s, t: t - s,
        shift_rate=lambda t: 1.0,
    )
    return vs.ProblemSpec(horizon=vs.Horizon(t_start, t_end), set=moving,
                          f1=None, f2=None, x0=np.array([float(x0)]))


def interior_volterra_problem(x0=1.0):
    """Huge static ball, f1 = -x, f2 = -x: reduces to x' = x + int x."""
    hz = vs.Horizon(0.0, 1.0)
    ball = vs.static_set(vs.BallBase(np.zeros(1), 1e6), 1)
    one = lambda t: np.ones_like(np.asarray(t, dtype=float)) + 0.0
    f1 = vs.PerturbationSpec(eval=lambda t, x: -x, growth_beta1=one,
                             lipschitz_radius=lambda eta: (lambda t: 1.0))
    f2 = vs.KernelSpec(
        eval=lambda t, s, x: -x,
        growth_beta2=lambda t, s: np.ones_like(np.asarray(s, dtype=float)) + 0.0,
        affine_growth=(lambda t, s: np.zeros_like(np.asarray(s, dtype=float)) + 0.0, one),
        lipschitz_radius=lambda eta: (lambda t: 1.0),
        separable=(vs.SeparableTerm(phi=lambda t: np.array([[1.0]]), psi=lambda s, x: -x),),
    )
    return vs.ProblemSpec(horizon=hz, set=ball, f1=f1, f2=f2, x0=np.array([float(x0)]))


def interior_exact_solution():
    """Closed form of x' = x + int x, x(0) = 1 (roots of r^2 = r + 1)."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    psi = (1.0 - math.sqrt(5.0)) / 2.0
    a = (1.0 - psi) / (phi - psi)
    b = 1.0 - a
    return lambda t: a * np.exp(phi * np.asarray(t)) + b * np.exp(psi * np.asarray(t))


def parabola_set(with_constants=True):
    """g(t,x) = t^(1/3) - x1 - x2^2, the cube-root moving boundary."""
    kwargs = {}
    if with_constants:
        kwargs = dict(gamma=2.0, delta=1.0, rho=1.0, witness=np.array([1.0, 0.0]),
                      variation_w=lambda t: np.cbrt(t))
    return vs.SublevelSet(
        g=lambda t, x: np.array([np.cbrt(t) - x[0] - x[1] ** 2]),
        grad=lambda t, x: np.array([[-1.0, -2.0 * x[1]]]),
        **kwargs,
    )


def halfline_nidcs(f1_const=1.0):
    """Static C = [0, inf) as an inequality set, with constant inward drift."""
    moving = vs.SublevelSet(
        g=lambda t, x: np.array([-x[0]]),
        grad=lambda t, x: np.array([[-1.0]]),
        gamma=0.0, delta=1.0, rho=math.inf, witness=np.array([1.0]),
        variation_w=lambda t: 0.0, variation_w_rate=lambda t: 0.0,
    )
    c = float(f1_const)
    f1 = vs.PerturbationSpec(
        eval=lambda t, x: np.array([c]),
        growth_beta1=lambda t: np.full_like(np.asarray(t, dtype=float), abs(c)) + 0.0,
        lipschitz_radius=lambda eta: (lambda t: 0.0),
    )
    return vs.NidcsSpec(horizon=vs.Horizon(0.0, 1.0), f1=f1, f2=None,
                        set=moving, x0=np.array([0.0]))


# ---------------------------------------------------------------------------
# saturated-inequality RK4 oracles (independent of the bound evaluators)
# ---------------------------------------------------------------------------

def rk4(fun, y0, t0, t1, n):
    """Plain fixed-step RK4 on y' = fun(t, y); returns (ts, ys)."""
    ts = np.linspace(t0, t1, n + 1)
    h = (t1 - t0) / n
    ys = np.empty((n + 1, np.size(y0)))
    ys[0] = y0
    for k in range(n):
        t, y = ts[k], ys[k]
        k1 = fun(t, y)
        k2 = fun(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = fun(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = fun(t + h, y + h * k3)
        ys[k + 1] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return ts, ys


def saturated_scalar(a, b, alpha, w0, t0, t1, n=256):
    """(1-alpha) w' = a w + b w^alpha integrated forward; w stays >= 0."""
    q = 1.0 - alpha

    def fun(t, y):
        w = max(float(y[0]), 0.0)
        return np.array([(a(t) * w + b(t) * w ** alpha) / q])
    return rk4(fun, np.array([w0]), t0, t1, n)


def saturated_integral(a, b1, b2, rho0, t0, t1, n=256):
    """rho' = a + b1 rho + b2 * int rho, via the running-integral companion state."""
    def fun(t, y):
        rho, acc = y
        return np.array([a(t) + b1(t) * rho + b2(t) * acc, rho])
    ts, ys = rk4(fun, np.array([rho0, 0.0]), t0, t1, n)
    return ts, ys[:, 0]


def saturated_sqrt(k1, k2, eps_fn, eps_const, rho0, t0, t1, n=256):
    """rho' = eps + eps_const + K1 rho + K2 sqrt(rho) int sqrt(rho)."""
    def fun(t, y):
        rho = max(float(y[0]), 0.0)
        acc = y[1]
        return np.array([eps_fn(t) + eps_const + k1(t) * rho + k2(t) * math.sqrt(rho) * acc,
                         math.sqrt(rho)])
    ts, ys = rk4(fun, np.array([rho0, 0.0]), t0, t1, n)
    return ts, np.maximum(ys[:, 0], 0.0)


def nonneg_poly(rng, degree=3, scale=1.0):
    """Random polynomial kept nonnegative on [0, 1]-ish ranges: squared form."""
    coeffs = rng.uniform(-1.0, 1.0, size=degree)

    def fn(t):
        return scale * np.polyval(coeffs, np.asarray(t)) ** 2
    return fn


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
