"""Problem-description files: TOML sections compiled into solver inputs.

A file either describes a sweeping process directly (sections horizon, set,
f1, f2, x0, solve) or a diode circuit (sections horizon, circuit, solve).
Function-valued fields are expressions in the tiny built-in grammar; problems
stay data, no scripting runtime is embedded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .circuits import CircuitParams, build_circuit_problem
from .core import Horizon, KernelSpec, PerturbationSpec, ProblemSpec, SeparableTerm, as_vector
from .errors import ConfigError, VolsweepError
from .expressions import compile_matrix, compile_vector, parse_expression
from .nidcs import NidcsSpec
from .quad import prefix_simpson, sample
from .sets import (
    BallBase,
    BoxBase,
    HalfSpaceBase,
    OrthantBase,
    PolyhedronBase,
    SublevelSet,
    TranslatedFixedSet,
)
from .solver import RefineOptions, SolveOptions


@dataclass
class LoadedProblem:
    problem: ProblemSpec
    options: SolveOptions
    nidcs: Optional[NidcsSpec] = None
    circuit: Optional[CircuitParams] = None
    approx_variation: bool = False


def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", parse=True) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}", parse=True) from exc


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{where}]", parse=True)
    return table[key]


def _state_vars(dim: int) -> list:
    return [f"x{i + 1}" for i in range(dim)]


def _env_state(x) -> dict:
    return {f"x{i + 1}": float(v) for i, v in enumerate(x)}


def _scalar_fn(expr):
    """Expression in t -> function usable on scalars and arrays."""
    def fn(t):
        tt = np.asarray(t, dtype=float)
        out = np.asarray(expr(t=tt), dtype=float)
        if out.shape != tt.shape:
            out = out + np.zeros_like(tt)
        return out if tt.ndim else float(out)
    return fn


def _two_time_fn(expr):
    """Expression in (t, s) -> function broadcasting over the second argument."""
    def fn(t, s):
        ss = np.asarray(s, dtype=float)
        out = np.asarray(expr(t=np.asarray(t, dtype=float), s=ss), dtype=float)
        if out.shape != ss.shape:
            out = out + np.zeros_like(ss)
        return out if ss.ndim else float(out)
    return fn


def _lipschitz_fn(text):
    expr = parse_expression(text, ["t", "eta"])

    def factory(eta):
        return lambda t: float(expr(t=float(t), eta=float(eta)))
    return factory


def _numeric_modulus(rate_fn, horizon: Horizon, samples: int = 4096):
    """Cumulative arc length from a pointwise rate, by dense Simpson sampling."""
    ts = np.linspace(horizon.t_start, horizon.t_end, samples + 1)
    vals = sample(rate_fn, ts)
    cum = prefix_simpson(np.abs(vals), (horizon.t_end - horizon.t_start) / samples)

    def modulus(s, t):
        lo, hi = (s, t) if s <= t else (t, s)
        return float(np.interp(hi, ts, cum) - np.interp(lo, ts, cum))
    return modulus


def _build_base(table: dict):
    kind = _require(table, "base", "set")
    if kind == "orthant":
        return OrthantBase(int(_require(table, "dim", "set")))
    if kind == "box":
        return BoxBase(as_vector(_require(table, "lower", "set")),
                       as_vector(_require(table, "upper", "set")))
    if kind == "ball":
        return BallBase(as_vector(_require(table, "center", "set")),
                        float(_require(table, "radius", "set")))
    if kind == "halfspace":
        return HalfSpaceBase(as_vector(_require(table, "normal", "set")),
                             float(_require(table, "offset", "set")))
    if kind == "polyhedron":
        return PolyhedronBase(np.asarray(_require(table, "a_matrix", "set"), dtype=float),
                              as_vector(_require(table, "b", "set")))
    raise ConfigError(f"unknown base set {kind!r}", parse=True)


def _base_dim(table: dict, base) -> int:
    if isinstance(base, OrthantBase):
        return base.dim
    if isinstance(base, BoxBase):
        return base.lower.size
    if isinstance(base, BallBase):
        return base.center.size
    if isinstance(base, HalfSpaceBase):
        return base.normal.size
    return base.a_matrix.shape[1]


def _build_translated(table: dict, horizon: Horizon):
    base = _build_base(table)
    dim = _base_dim(table, base)
    approx = False
    if "shift" in table:
        shift_expr = compile_vector(table["shift"], ["t"])
        shift = lambda t: shift_expr(t=float(t))
    else:
        zero = np.zeros(dim)
        shift = lambda t: zero
    if "shift_rate" in table:
        rate = _scalar_fn(parse_expression(table["shift_rate"], ["t"]))
    elif "shift" not in table:
        rate = lambda t: 0.0
    else:
        # finite-difference speed of the shift curve; marks the modulus approximate
        def rate(t, _h=1e-6):
            return float(np.linalg.norm(np.asarray(shift(t + _h)) - np.asarray(shift(t - _h)))) / (2.0 * _h)
    if "variation" in table:
        var_expr = parse_expression(table["variation"], ["s", "t"])
        modulus = lambda s, t: abs(float(var_expr(s=float(s), t=float(t))))
    elif "shift" in table:
        modulus = _numeric_modulus(rate, horizon)
        approx = True
    else:
        modulus = lambda s, t: 0.0
    moving = TranslatedFixedSet(base=base, shift=shift, shift_modulus=modulus,
                                shift_rate=rate)
    return moving, dim, approx


def _build_sublevel(table: dict):
    g_list = _require(table, "g", "set")
    grad_rows = _require(table, "grad", "set")
    if len(grad_rows) != len(g_list):
        raise ConfigError("need one gradient row per constraint", parse=True)
    dim = len(grad_rows[0])
    svars = ["t"] + _state_vars(dim)
    g_exprs = [parse_expression(gtxt, svars) for gtxt in g_list]
    grad_exprs = [[parse_expression(e, svars) for e in row] for row in grad_rows]

    def g_fn(t, x):
        env = {"t": float(t), **_env_state(x)}
        return np.array([float(e(**env)) for e in g_exprs])

    def grad_fn(t, x):
        env = {"t": float(t), **_env_state(x)}
        return np.array([[float(e(**env)) for e in row] for row in grad_exprs])

    w_fn = None
    w_rate = None
    if "w" in table:
        w_expr = parse_expression(table["w"], ["t"])
        w_fn = lambda t: float(w_expr(t=float(t)))
    if "w_rate" in table:
        w_rate = _scalar_fn(parse_expression(table["w_rate"], ["t"]))
    moving = SublevelSet(
        g=g_fn,
        grad=grad_fn,
        gamma=float(table["gamma"]) if "gamma" in table else None,
        delta=float(table["delta"]) if "delta" in table else None,
        rho=float(table["rho"]) if "rho" in table else None,
        witness=as_vector(table["witness"]) if "witness" in table else None,
        variation_w=w_fn,
        variation_w_rate=w_rate,
    )
    return moving, dim


def _build_f1(table: Optional[dict], dim: int) -> Optional[PerturbationSpec]:
    if table is None:
        return None
    svars = ["t"] + _state_vars(dim)
    if "exprs" in table:
        vec = compile_vector(table["exprs"], svars)

        def eval_fn(t, x):
            return vec(t=float(t), **_env_state(x))
    elif "matrix" in table:
        mat = compile_matrix(table["matrix"], ["t"])
        offset = compile_vector(table["offset"], ["t"]) if "offset" in table else None

        def eval_fn(t, x):
            out = mat(t=float(t)) @ np.asarray(x, dtype=float)
            if offset is not None:
                out = out + offset(t=float(t))
            return out
    else:
        raise ConfigError("[f1] needs either exprs or matrix", parse=True)
    beta1 = _scalar_fn(parse_expression(table["beta1"], ["t"])) if "beta1" in table else None
    lips = _lipschitz_fn(table["lipschitz"]) if "lipschitz" in table else None
    return PerturbationSpec(eval=eval_fn, growth_beta1=beta1, lipschitz_radius=lips)


def _build_f2(table: Optional[dict], dim: int) -> Optional[KernelSpec]:
    if table is None:
        return None
    kvars = ["t", "s"] + _state_vars(dim)
    separable = None
    if "separable" in table:
        terms = []
        for block in table["separable"]:
            phi_m = compile_matrix(_require(block, "phi", "f2.separable"), ["t"])
            psi_v = compile_vector(_require(block, "psi", "f2.separable"),
                                   ["s"] + _state_vars(dim))
            terms.append(SeparableTerm(
                phi=lambda t, _m=phi_m: _m(t=float(t)),
                psi=lambda s, x, _v=psi_v: _v(s=float(s), **_env_state(x)),
            ))
        separable = tuple(terms)
    if "exprs" in table:
        vec = compile_vector(table["exprs"], kvars)

        def eval_fn(t, s, x):
            return vec(t=float(t), s=float(s), **_env_state(x))
    elif separable:
        def eval_fn(t, s, x, _terms=separable):
            out = np.zeros(dim)
            for term in _terms:
                out += np.atleast_2d(term.phi(float(t))) @ as_vector(term.psi(float(s), x))
            return out
    else:
        raise ConfigError("[f2] needs exprs and/or separable blocks", parse=True)
    beta2 = _two_time_fn(parse_expression(table["beta2"], ["t", "s"])) if "beta2" in table else None
    affine = None
    if "g" in table and "alpha" in table:
        affine = (_two_time_fn(parse_expression(table["g"], ["t", "s"])),
                  _scalar_fn(parse_expression(table["alpha"], ["t"])))
    lips = _lipschitz_fn(table["lipschitz"]) if "lipschitz" in table else None
    return KernelSpec(eval=eval_fn, growth_beta2=beta2, affine_growth=affine,
                      lipschitz_radius=lips, separable=separable)


def _build_options(table: Optional[dict]) -> SolveOptions:
    table = table or {}
    refine = None
    if "refine_target" in table:
        refine = RefineOptions(target=float(table["refine_target"]),
                               max_doublings=int(table.get("refine_max_doublings", 6)))
    return SolveOptions(
        steps=int(table.get("steps", 200)),
        memory_rule=str(table.get("memory", "left-rectangle")),
        projection_tol=float(table.get("projection_tol", 1e-10)),
        refine=refine,
    )


def _build_source(table: dict, horizon: Horizon):
    """Source current, pointwise rate and arc-length modulus; approximate flag last."""
    raw = _require(table, "source", "circuit")
    if isinstance(raw, dict):
        shape = _require(raw, "shape", "circuit.source")
        off = float(raw.get("offset", 0.0))
        if shape == "sine":
            amp = float(_require(raw, "amplitude", "circuit.source"))
            omega = float(_require(raw, "omega", "circuit.source"))

            def src(t):
                return off + amp * np.sin(omega * np.asarray(t, dtype=float))

            def rate(t):
                return abs(amp * omega) * np.abs(np.cos(omega * np.asarray(t, dtype=float)))

            def folded(x):
                # integral of |cos| from 0 to x
                m = math.floor(x / math.pi + 0.5)
                return 2.0 * m + (-1.0) ** m * math.sin(x)

            def modulus(s, t):
                lo, hi = (s, t) if s <= t else (t, s)
                return abs(amp) * (folded(omega * hi) - folded(omega * lo))
            return src, rate, modulus, False
        if shape == "sine_clipped":
            amp = float(_require(raw, "amplitude", "circuit.source"))
            omega = float(_require(raw, "omega", "circuit.source"))

            def src(t):
                return off + amp * np.maximum(np.sin(omega * np.asarray(t, dtype=float)), 0.0)

            def rate(t):
                tt = np.asarray(t, dtype=float)
                return abs(amp * omega) * np.abs(np.cos(omega * tt)) * (np.sin(omega * tt) > 0.0)

            def half_arc(y):
                # integral of |cos| over [0, y] for y in [0, pi]
                return math.sin(y) if y <= 0.5 * math.pi else 2.0 - math.sin(y)

            def clipped(x):
                p = math.floor(x / (2.0 * math.pi))
                rem = x - 2.0 * math.pi * p
                return 2.0 * p + half_arc(min(rem, math.pi))

            def modulus(s, t):
                lo, hi = (s, t) if s <= t else (t, s)
                return abs(amp) * (clipped(omega * hi) - clipped(omega * lo))
            return src, rate, modulus, False
        if shape == "ramp":
            slope = float(_require(raw, "slope", "circuit.source"))

            def src(t):
                return off + slope * np.asarray(t, dtype=float)
            return src, (lambda t: abs(slope)), (lambda s, t: abs(slope) * abs(t - s)), False
        raise ConfigError(f"unknown source shape {shape!r}", parse=True)
    src = _scalar_fn(parse_expression(raw, ["t"]))
    if "source_rate" in table:
        rate = _scalar_fn(parse_expression(table["source_rate"], ["t"]))
    else:
        def rate(t, _h=1e-6):
            return abs(float(src(t + _h)) - float(src(t - _h))) / (2.0 * _h)
    if "source_variation" in table:
        var_expr = parse_expression(table["source_variation"], ["s", "t"])
        return src, rate, (lambda s, t: abs(float(var_expr(s=float(s), t=float(t))))), False
    return src, rate, _numeric_modulus(rate, horizon), True


def _build_circuit(cfg: dict, horizon: Horizon) -> tuple:
    table = cfg["circuit"]
    src, rate, modulus, approx = _build_source(table, horizon)
    cap = {}
    for name in ("c1", "c2", "c3"):
        cap[name] = _scalar_fn(parse_expression(_require(table, name, "circuit"), ["t"]))
    params = CircuitParams(
        r1=float(_require(table, "r1", "circuit")),
        r2=float(_require(table, "r2", "circuit")),
        l1=float(_require(table, "l1", "circuit")),
        l2=float(_require(table, "l2", "circuit")),
        c1=cap["c1"], c2=cap["c2"], c3=cap["c3"],
        source=src,
        source_variation=modulus,
        source_rate=lambda t: float(rate(t)),
        horizon=horizon,
        x0=as_vector(_require(table, "x0", "circuit")),
    )
    return params, approx


def build_problem(cfg: dict) -> LoadedProblem:
    """Assemble and validate the solver inputs described by a parsed config."""
    if "horizon" not in cfg:
        raise ConfigError("missing [horizon] section", parse=True)
    horizon = Horizon(float(_require(cfg["horizon"], "t_start", "horizon")),
                      float(_require(cfg["horizon"], "t_end", "horizon")))
    options = _build_options(cfg.get("solve"))

    if "circuit" in cfg:
        params, approx = _build_circuit(cfg, horizon)
        problem = build_circuit_problem(params)
        return LoadedProblem(problem=problem, options=options, circuit=params,
                             approx_variation=approx)

    if "set" not in cfg:
        raise ConfigError("missing [set] section", parse=True)
    set_table = cfg["set"]
    kind = _require(set_table, "kind", "set")
    approx = False
    nidcs = None
    if kind == "translated":
        moving, dim, approx = _build_translated(set_table, horizon)
    elif kind == "sublevel":
        moving, dim = _build_sublevel(set_table)
    else:
        raise ConfigError(f"unknown set kind {kind!r}", parse=True)

    if "x0" not in cfg:
        raise ConfigError("missing [x0] section", parse=True)
    x0 = as_vector(_require(cfg["x0"], "value", "x0"))
    if x0.size != dim:
        raise ConfigError(f"x0 has dimension {x0.size}, set expects {dim}")

    f1 = _build_f1(cfg.get("f1"), dim)
    f2 = _build_f2(cfg.get("f2"), dim)
    problem = ProblemSpec(horizon=horizon, set=moving, f1=f1, f2=f2, x0=x0)
    if kind == "sublevel":
        nidcs = NidcsSpec(horizon=horizon, f1=f1, f2=f2, set=moving, x0=x0)
    return LoadedProblem(problem=problem, options=options, nidcs=nidcs,
                         approx_variation=approx)


def load_problem(path: str) -> LoadedProblem:
    cfg = load_config(path)
    try:
        return build_problem(cfg)
    except ConfigError:
        raise
    except VolsweepError as exc:
        raise ConfigError(str(exc)) from exc
