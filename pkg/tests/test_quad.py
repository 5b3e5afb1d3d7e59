import math

import numpy as np
import pytest

from volsweep.errors import EvaluationError
from volsweep.quad import integrate, prefix_simpson, sample, simpson_panels


def test_polynomial_exact():
    assert integrate(lambda t: 3 * t ** 2, 0.0, 2.0) == pytest.approx(8.0, rel=1e-12)


def test_exponential():
    assert integrate(np.exp, 0.0, 1.0) == pytest.approx(math.e - 1.0, rel=1e-10)


def test_orientation_and_empty():
    assert integrate(np.exp, 1.0, 0.0) == pytest.approx(1.0 - math.e, rel=1e-10)
    assert integrate(np.exp, 0.5, 0.5) == 0.0


def test_nonfinite_raises():
    with np.errstate(divide="ignore"), pytest.raises(EvaluationError):
        integrate(lambda t: 1.0 / t, 0.0, 1.0)


def test_prefix_matches_total():
    xs = np.linspace(0.0, 1.0, 65)
    ys = np.exp(xs)
    pref = prefix_simpson(ys, xs[1] - xs[0])
    assert pref[0] == 0.0
    assert pref[-1] == pytest.approx(simpson_panels(ys, xs[1] - xs[0]), rel=1e-14)
    # interior nodes agree with the analytic integral to Simpson accuracy
    assert np.allclose(pref, np.exp(xs) - 1.0, atol=1e-8)


def test_sample_scalar_fallback():
    calls = []

    def scalar_only(x):
        calls.append(x)
        return float(x) ** 2
    xs = np.linspace(0.0, 1.0, 9)
    ys = sample(scalar_only, xs)
    assert np.allclose(ys, xs ** 2)
    assert len(calls) >= 9
