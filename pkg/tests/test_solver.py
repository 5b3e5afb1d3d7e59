import math

import numpy as np
import pytest

import volsweep as vs
from conftest import (
    halfline_problem,
    interior_exact_solution,
    interior_volterra_problem,
    parabola_set,
)
from volsweep.solver import memory_series


# ---------------------------------------------------------------------------
# memory term
# ---------------------------------------------------------------------------

def _history_problem(f2, d=1):
    moving = vs.static_set(vs.BallBase(np.zeros(d), 1e6), d)
    return vs.ProblemSpec(horizon=vs.Horizon(0.0, 1.0), set=moving,
                          f1=None, f2=f2, x0=np.zeros(d))


def test_memory_zero_kernel():
    prob = _history_problem(None)
    grid = vs.TimeGrid.uniform(prob.horizon, 4)
    states = np.zeros((5, 1))
    assert np.array_equal(vs.memory_term(prob, grid, states, 3), np.zeros(1))


def test_memory_constant_kernel():
    f2 = vs.KernelSpec(eval=lambda t, s, x: np.array([1.0]))
    prob = _history_problem(f2)
    grid = vs.TimeGrid.uniform(prob.horizon, 4)
    states = np.zeros((5, 1))
    out = vs.memory_term(prob, grid, states, 4, rule="left-rectangle")
    assert out[0] == pytest.approx(1.0)  # t_n - t_0


def test_memory_riemann_sum_of_s():
    # f2(t, s, x) = s on a uniform grid over [0, 1], k = n = 4, left rule:
    # (1/4) * (0 + 0.25 + 0.5 + 0.75) = 0.375, short of the exact 0.5 by O(h)
    f2 = vs.KernelSpec(eval=lambda t, s, x: np.array([s]))
    prob = _history_problem(f2)
    grid = vs.TimeGrid.uniform(prob.horizon, 4)
    states = np.zeros((5, 1))
    out = vs.memory_term(prob, grid, states, 4, rule="left-rectangle")
    assert out[0] == pytest.approx(0.375, abs=1e-15)
    out_tr = vs.memory_term(prob, grid, states, 4, rule="trapezoid")
    assert out_tr[0] == pytest.approx(0.5, abs=1e-15)


def test_memory_separable_matches_direct(rng):
    # random linear kernel A(t) x against its factored form
    a0 = rng.standard_normal((2, 2))

    def a_of_t(t):
        return a0 * (1.0 + 0.5 * t)
    direct = vs.KernelSpec(eval=lambda t, s, x: a_of_t(t) @ x)
    factored = vs.KernelSpec(eval=lambda t, s, x: a_of_t(t) @ x,
                             separable=(vs.SeparableTerm(phi=a_of_t, psi=lambda s, x: x),))
    prob_d = _history_problem(direct, d=2)
    prob_f = _history_problem(factored, d=2)
    grid = vs.TimeGrid.uniform(prob_d.horizon, 6)
    states = rng.standard_normal((7, 2))
    for rule in ("left-rectangle", "trapezoid"):
        for k in (1, 3, 6):
            md = vs.memory_term(prob_d, grid, states, k, rule)
            mf = vs.memory_term(prob_f, grid, states, k, rule)
            assert np.linalg.norm(md - mf) <= 1e-12 * max(1.0, np.linalg.norm(md))
        series = memory_series(prob_f, grid, states, rule)
        for k in range(6):
            assert np.allclose(series[k], vs.memory_term(prob_d, grid, states, k, rule),
                               atol=1e-12)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def test_stationary_interior_point():
    moving = vs.static_set(vs.BallBase(np.zeros(1), 5.0), 1)
    prob = vs.ProblemSpec(horizon=vs.Horizon(0.0, 1.0), set=moving,
                          f1=None, f2=None, x0=np.array([1.0]))
    rep = vs.solve(prob, vs.SolveOptions(steps=20))
    assert np.array_equal(rep.trajectory.states, np.ones((21, 1)))
    assert np.all(rep.trajectory.velocities == 0.0)


def test_halfline_steps_exact():
    prob = halfline_problem(x0=0.0)
    grid = vs.TimeGrid.uniform(prob.horizon, 10)
    states = [prob.x0]
    for k in range(10):
        states.append(vs.step(prob, grid, states, k))
    for k, x in enumerate(states):
        assert x[0] == grid.nodes[k]


def test_normal_cone_absorbs_inward_drift():
    # static C = [0, inf), f1 = 1 pushes left; state pinned at zero
    moving = vs.static_set(vs.OrthantBase(1), 1)
    f1 = vs.PerturbationSpec(eval=lambda t, x: np.array([1.0]),
                             growth_beta1=lambda t: 1.0 + 0 * np.asarray(t))
    prob = vs.ProblemSpec(horizon=vs.Horizon(0.0, 1.0), set=moving, f1=f1,
                          f2=None, x0=np.array([0.0]))
    rep = vs.solve(prob, vs.SolveOptions(steps=16))
    assert np.all(rep.trajectory.states == 0.0)


def test_halfline_solve_matches_closed_form():
    prob = halfline_problem(x0=0.0)
    rep = vs.solve(prob, vs.SolveOptions(steps=100))
    expected = np.maximum(0.0, rep.trajectory.grid.nodes)
    assert float(np.max(np.abs(rep.trajectory.states[:, 0] - expected))) <= 1e-12
    assert rep.feasibility <= 1e-10


def test_interior_volterra_vs_oracle():
    prob = interior_volterra_problem()
    rep = vs.solve(prob, vs.SolveOptions(steps=400, memory_rule="trapezoid"))
    exact = interior_exact_solution()
    err = float(np.max(np.abs(rep.trajectory.states[:, 0]
                              - exact(rep.trajectory.grid.nodes))))
    assert err <= 2e-2
    oracle = vs.volterra_reference(prob.f1, prob.f2, prob.x0, prob.horizon, 400)
    gap = float(np.max(np.abs(rep.trajectory.states - oracle.states)))
    assert gap <= 2e-2


def test_solver_feasibility_on_sublevel():
    moving = parabola_set(with_constants=True)
    f1 = vs.PerturbationSpec(eval=lambda t, x: np.array([0.2, 0.1]),
                             growth_beta1=lambda t: math.sqrt(0.05) + 0 * np.asarray(t))
    prob = vs.ProblemSpec(horizon=vs.Horizon(0.0, 1.0), set=moving, f1=f1,
                          f2=None, x0=np.array([0.0, 0.0]))
    rep = vs.solve(prob, vs.SolveOptions(steps=125))
    assert rep.feasibility <= 1e-9
    assert rep.velocity_margin is not None and rep.velocity_margin <= 0.0


def test_step_too_coarse_guard():
    moving = parabola_set(with_constants=True)
    prob = vs.ProblemSpec(horizon=vs.Horizon(0.0, 1.0), set=moving, f1=None,
                          f2=None, x0=np.array([0.0, 0.0]))
    with pytest.raises(vs.StepTooCoarseError):
        vs.solve(prob, vs.SolveOptions(steps=8))  # variation(0, 1/8) = 0.5 = r


def test_determinism():
    prob = interior_volterra_problem()
    r1 = vs.solve(prob, vs.SolveOptions(steps=64))
    r2 = vs.solve(prob, vs.SolveOptions(steps=64))
    assert np.array_equal(r1.trajectory.states, r2.trajectory.states)
    assert r1.feasibility == r2.feasibility


def test_refinement_loop():
    prob = interior_volterra_problem()
    rep = vs.solve(prob, vs.SolveOptions(
        steps=50, memory_rule="trapezoid",
        refine=vs.RefineOptions(target=2e-3, max_doublings=6)))
    assert rep.cauchy_gap is not None and rep.cauchy_gap <= 2e-3
    assert rep.trajectory.grid.n_steps > 50


def test_refine_requires_growth_data():
    moving = vs.static_set(vs.OrthantBase(1), 1)
    f1 = vs.PerturbationSpec(eval=lambda t, x: np.array([0.1]))  # no beta1
    prob = vs.ProblemSpec(horizon=vs.Horizon(0.0, 1.0), set=moving, f1=f1,
                          f2=None, x0=np.array([1.0]))
    with pytest.raises(vs.DataMissingError):
        vs.solve(prob, vs.SolveOptions(steps=10, refine=vs.RefineOptions(target=1e-3)))
    # without refine the solve proceeds, bounds simply absent
    rep = vs.solve(prob, vs.SolveOptions(steps=10))
    assert rep.bounds is None and rep.velocity_margin is None


def test_memory_rules_same_limit():
    prob = interior_volterra_problem()
    lr = vs.solve(prob, vs.SolveOptions(steps=800, memory_rule="left-rectangle"))
    tr = vs.solve(prob, vs.SolveOptions(steps=800, memory_rule="trapezoid"))
    gap = float(np.max(np.abs(lr.trajectory.states - tr.trajectory.states)))
    assert gap <= 5e-3


# ---------------------------------------------------------------------------
# stability probe
# ---------------------------------------------------------------------------

def test_stability_translation_contracts():
    prob = halfline_problem(x0=0.5)
    rep = vs.stability_probe(prob, vs.SolveOptions(steps=100),
                             np.array([0.5]), np.array([0.5 + 1e-6]))
    assert rep.ratio <= 1.0 + 1e-9
    assert rep.certificate == pytest.approx(math.e, rel=1e-6)
    assert rep.passed


def test_stability_linear_growth():
    # unconstrained f1 = -x gives x' = x: spread grows like e^(t - t0)
    moving = vs.static_set(vs.BallBase(np.zeros(1), 1e6), 1)
    f1 = vs.PerturbationSpec(eval=lambda t, x: -x,
                             growth_beta1=lambda t: 1.0 + 0 * np.asarray(t),
                             lipschitz_radius=lambda eta: (lambda t: 1.0))
    prob = vs.ProblemSpec(horizon=vs.Horizon(0.0, 1.0), set=moving, f1=f1,
                          f2=None, x0=np.array([1.0]))
    rep = vs.stability_probe(prob, vs.SolveOptions(steps=400),
                             np.array([1.0]), np.array([1.01]))
    assert rep.ratio == pytest.approx(math.e, rel=1e-2)
    assert rep.certificate == pytest.approx(math.exp(2.0), rel=1e-6)
    assert rep.passed


def test_stability_zero_forcing_nonexpansive():
    moving = vs.static_set(vs.OrthantBase(2), 2)
    prob = vs.ProblemSpec(horizon=vs.Horizon(0.0, 1.0), set=moving, f1=None,
                          f2=None, x0=np.array([1.0, 1.0]))
    rep = vs.stability_probe(prob, vs.SolveOptions(steps=50),
                             np.array([1.0, 1.0]), np.array([0.5, 2.0]))
    assert rep.ratio <= 1.0 + 1e-12


def test_stability_degenerate_pair():
    prob = halfline_problem(x0=0.5)
    with pytest.raises(vs.DegenerateInputError):
        vs.stability_probe(prob, vs.SolveOptions(steps=10),
                           np.array([0.5]), np.array([0.5]))


def test_doubled_velocity_envelope_with_refinement():
    # the classical discrete-derivative estimate carries a factor 2 on the
    # forcing part; the overshoot beyond it must vanish under refinement
    from conftest import all_config_paths  # noqa: PLC0415
    import volsweep as vs  # noqa: PLC0415
    for name in ("halfline.toml", "orthant2d.toml", "ball.toml"):
        from conftest import config_path  # noqa: PLC0415
        loaded = vs.load_problem(config_path(name))
        prob = loaded.problem
        bounds = vs.apriori_constants(prob)
        assert bounds.single_window
        slacks = []
        for n in (250, 1000):
            rep = vs.solve(prob, vs.SolveOptions(steps=n))
            speeds = rep.trajectory.speeds()
            env = np.array([2.0 * (bounds.velocity_bound(float(t))
                                   - prob.set.variation_rate(float(t)))
                            + prob.set.variation_rate(float(t))
                            for t in rep.trajectory.grid.nodes[:-1]])
            slacks.append(float(np.max(speeds - env)))
        assert slacks[-1] <= max(slacks[0], 0.0) + 1e-12
        assert slacks[-1] <= 1e-9
