"""Sampled checks that declared growth/Lipschitz data really bound the forcings.

The solver and bound evaluators take these declarations on trust; these tests
are the place where the trust is earned, by sampling the feasible tube.
"""
import numpy as np
import pytest

import volsweep as vs
from conftest import all_config_paths


def _feasible_samples(prob, rng, per_time=3):
    ts = np.linspace(prob.horizon.t_start, prob.horizon.t_end, 7)
    out = []
    for t in ts:
        spread = 0.2 if isinstance(prob.set, vs.SublevelSet) else 0.5
        for x in vs.sample_feasible(prob.set, float(t), prob.x0, spread, per_time, rng):
            out.append((float(t), x))
    return out


@pytest.mark.parametrize("path", all_config_paths(), ids=lambda p: p.stem)
def test_growth_bounds_hold_on_samples(path, rng):
    loaded = vs.load_problem(str(path))
    prob = loaded.problem
    samples = _feasible_samples(prob, rng)
    if prob.f1 is not None and prob.f1.growth_beta1 is not None:
        for t, x in samples:
            lhs = float(np.linalg.norm(prob.f1(t, x)))
            rhs = float(np.asarray(prob.f1.growth_beta1(t))) * (1.0 + float(np.linalg.norm(x)))
            assert lhs <= rhs + 1e-12, f"beta1 violated at t={t}, x={x}"
    if prob.f2 is not None:
        for t, x in samples:
            for s in np.linspace(prob.horizon.t_start, t, 4):
                val = float(np.linalg.norm(prob.f2(t, float(s), x)))
                if prob.f2.growth_beta2 is not None:
                    cap = float(np.asarray(prob.f2.growth_beta2(t, float(s)))) \
                        * (1.0 + float(np.linalg.norm(x)))
                    assert val <= cap + 1e-12
                if prob.f2.affine_growth is not None:
                    g_fn, alpha_fn = prob.f2.affine_growth
                    cap = float(np.asarray(g_fn(t, float(s)))) \
                        + float(np.asarray(alpha_fn(t))) * float(np.linalg.norm(x))
                    assert val <= cap + 1e-12


@pytest.mark.parametrize("path", all_config_paths(), ids=lambda p: p.stem)
def test_separable_factorisation_matches_kernel(path, rng):
    loaded = vs.load_problem(str(path))
    f2 = loaded.problem.f2
    if f2 is None or f2.separable is None:
        pytest.skip("no factored kernel in this config")
    prob = loaded.problem
    for t, x in _feasible_samples(prob, rng, per_time=2):
        for s in np.linspace(prob.horizon.t_start, t, 3):
            direct = f2(t, float(s), x)
            factored = np.zeros_like(direct)
            for term in f2.separable:
                factored = factored + np.atleast_2d(term.phi(t)) @ np.atleast_1d(
                    term.psi(float(s), x))
            assert float(np.linalg.norm(direct - factored)) <= 1e-12 * max(
                1.0, float(np.linalg.norm(direct)))


@pytest.mark.parametrize("path", all_config_paths(), ids=lambda p: p.stem)
def test_lipschitz_data_holds_on_sample_pairs(path, rng):
    loaded = vs.load_problem(str(path))
    prob = loaded.problem
    eta = 10.0
    pairs = [(rng.uniform(-2, 2, prob.dim), rng.uniform(-2, 2, prob.dim))
             for _ in range(6)]
    ts = np.linspace(prob.horizon.t_start, prob.horizon.t_end, 5)
    if prob.f1 is not None and prob.f1.lipschitz_radius is not None:
        l1 = prob.f1.lipschitz_radius(eta)
        for t in ts:
            for x, y in pairs:
                lhs = float(np.linalg.norm(prob.f1(float(t), x) - prob.f1(float(t), y)))
                assert lhs <= float(l1(float(t))) * float(np.linalg.norm(x - y)) + 1e-12
    if prob.f2 is not None and prob.f2.lipschitz_radius is not None:
        l2 = prob.f2.lipschitz_radius(eta)
        for t in ts:
            for x, y in pairs:
                s = float(prob.horizon.t_start)
                lhs = float(np.linalg.norm(prob.f2(float(t), s, x) - prob.f2(float(t), s, y)))
                assert lhs <= float(l2(float(t))) * float(np.linalg.norm(x - y)) + 1e-12
