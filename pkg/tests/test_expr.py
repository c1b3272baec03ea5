import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swivel.expr import Expression, ExpressionError, evaluate, parse, to_python, to_string

SAMPLES = [
    "u^2 + v^2",
    "(1 + 0.1*exp(-u^2 - v^2))^2",
    "4/(1 - u^2 - v^2)^2",
    "-u^2",
    "2^3^2",
    "sin(u)*cos(v) + sinh(u/3) - cosh(v/4)",
    "pi*u - 1.5e-1*v",
    "u ** 2 / (1 + v*v)",
    "exp(u)^v",
]


def test_precedence_and_associativity():
    assert float(Expression("2^3^2")(0, 0)) == 512.0
    assert float(Expression("-2^2")(0, 0)) == -4.0
    assert float(Expression("2^-1")(0, 0)) == 0.5
    assert float(Expression("1 - 2 - 3")(0, 0)) == -4.0
    assert float(Expression("8 / 4 / 2")(0, 0)) == 1.0
    assert float(Expression("2 ** 3")(0, 0)) == 8.0
    assert float(Expression("pi")(0, 0)) == math.pi


def test_broadcast_shape():
    e = Expression("3")
    out = e(np.zeros(5), np.zeros(5))
    assert out.shape == (5,)
    assert np.all(out == 3.0)


@pytest.mark.parametrize("text", ["", "u +", "2 * (u", "foo(u)", "w", "u $ v", "exp u", "u v"])
def test_errors(text):
    with pytest.raises(ExpressionError):
        parse(text)


def test_non_string():
    with pytest.raises(ExpressionError):
        parse(None)


coords = st.floats(-0.6, 0.6)


@pytest.mark.parametrize("text", SAMPLES)
@given(u=coords, v=coords)
def test_compiled_matches_tree(text, u, v):
    e = Expression(text)
    want = evaluate(e.tree, np.float64(u), np.float64(v))
    assert float(e(u, v)) == pytest.approx(float(want), rel=1e-14, abs=1e-14)
    src = to_python(e.tree, "math")
    assert eval(f"lambda u, v: {src}", {"math": math})(u, v) == pytest.approx(float(want), rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("text", SAMPLES)
@given(u=coords, v=coords)
def test_partials_match_finite_differences(text, u, v):
    e = Expression(text)
    h = 1e-6
    for var, (du, dv) in (("u", (h, 0)), ("v", (0, h))):
        fd = (float(e(u + du, v + dv)) - float(e(u - du, v - dv))) / (2 * h)
        assert float(e.partial(var)(u, v)) == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_round_trip_through_to_string():
    for text in SAMPLES:
        tree = parse(text)
        back = parse(to_string(tree).replace(" ^ ", "^"))
        assert float(evaluate(back, 0.3, -0.2)) == pytest.approx(float(evaluate(tree, 0.3, -0.2)), rel=1e-15)


def test_partial_rejects_unknown_variable():
    with pytest.raises(ValueError):
        Expression("u").partial("w")
