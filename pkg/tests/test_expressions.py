import math

import numpy as np
import pytest

from volsweep.errors import ConfigError
from volsweep.expressions import compile_matrix, compile_vector, parse_expression


def ev(text, **env):
    return parse_expression(text, list(env)) (**env)


def test_arithmetic_and_precedence():
    assert ev("1 + 2*3") == 7.0
    assert ev("(1 + 2)*3") == 9.0
    assert ev("2^3^2") == 512.0          # right-associative
    assert ev("-2^2") == -4.0            # power binds tighter than unary minus
    assert ev("2^-2") == 0.25
    assert ev("6/4") == 1.5
    assert ev("2**3") == 8.0


def test_functions_and_constants():
    assert ev("sin(pi/2)") == pytest.approx(1.0)
    assert ev("exp(1)") == pytest.approx(math.e)
    assert ev("sqrt(abs(-9))") == 3.0
    assert ev("log(e)") == pytest.approx(1.0)


def test_variables_and_vectorisation():
    e = parse_expression("t^2 + 1", ["t"])
    assert e(t=3.0) == 10.0
    out = e(t=np.array([0.0, 1.0, 2.0]))
    assert np.allclose(out, [1.0, 2.0, 5.0])


def test_cube_root_power():
    e = parse_expression("t^(1/3)", ["t"])
    assert e(t=8.0) == pytest.approx(2.0)


def test_parse_errors():
    for bad in ["1 +", "foo(2)", "x", "(1", "1 $ 2", "sin 2"]:
        with pytest.raises(ConfigError) as exc:
            parse_expression(bad, ["t"])
        assert exc.value.parse


def test_vector_and_matrix_compile():
    v = compile_vector(["t", "2*t"], ["t"])
    assert np.allclose(v(t=2.0), [2.0, 4.0])
    m = compile_matrix([["1", "t"], ["0", "1"]], ["t"])
    assert np.allclose(m(t=3.0), [[1.0, 3.0], [0.0, 1.0]])
    with pytest.raises(ConfigError):
        compile_matrix([["1"], ["0", "1"]], ["t"])


def test_numbers_pass_through():
    e = parse_expression(2.5, ["t"])
    assert e(t=99.0) == 2.5
