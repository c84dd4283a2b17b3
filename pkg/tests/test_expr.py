import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnrad import expr
from bnrad.errors import ParseError


@pytest.mark.parametrize("text, x, value", [
    ("x*exp(x)", 0.5, 0.5 * math.exp(0.5)),
    ("2^3^2", 0.0, 512.0),
    ("-x^2", 3.0, -9.0),
    ("x - 2 - 3", 10.0, 5.0),
    ("x/2/4", 8.0, 1.0),
    ("sqrt(x) + log(1 + x)", 4.0, 2.0 + math.log(5.0)),
    ("sinh(x)*cosh(x) - tanh(x)", 0.3, math.sinh(0.3) * math.cosh(0.3) - math.tanh(0.3)),
    ("x^-1", 4.0, 0.25),
])
def test_parse_and_evaluate(text, x, value):
    assert expr.evaluate(expr.parse(text), x) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text, pos", [("x^", 2), ("foo(x)", 0), ("(x", 2), ("x y", 2), ("2**x", 2), ("", 0)])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as info:
        expr.parse(text)
    assert info.value.position == pos
    assert info.value.to_dict()["error"] == "ParseError"


@pytest.mark.parametrize("text, expected", [
    ("x*exp(x)", "exp(x) + x*exp(x)"),
    ("sinh(x)", "cosh(x)"),
    ("x^2^3", "8*x^7"),
    ("x^-1", "-x^(-2)"),
    ("(x+1)^2", "2*(x + 1)"),
])
def test_diff_simplifies(text, expected):
    assert expr.to_string(expr.diff(expr.parse(text))) == expected


def test_diff_of_variable_exponent():
    f = expr.compile_tree(expr.diff(expr.parse("x^x")))
    assert f(2.0) == pytest.approx(4.0 * (math.log(2.0) + 1.0), rel=1e-14)


def test_compile_vectorises():
    f = expr.compile_tree(expr.parse("3"))
    assert f(np.linspace(0, 1, 5)).shape == (5,)


# --- generated trees --------------------------------------------------------

leaves = st.one_of(
    st.just(expr.X),
    st.integers(min_value=0, max_value=9).map(lambda k: expr.Num(float(k))),
    st.sampled_from([0.5, 1.25, 2.5]).map(expr.Num),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: expr.BinOp(*t)),
        st.tuples(st.sampled_from(sorted(expr.FUNCTIONS)), children).map(lambda t: expr.Call(*t)),
        children.map(expr.Neg),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


def test_folding_keeps_singular_constants():
    assert expr.to_string(expr.fold(expr.parse("0^-1"))) == "0^(-1)"
    assert expr.to_string(expr.diff(expr.parse("0^0"))) == "0"
    with np.errstate(all="ignore"):
        assert np.isinf(expr.evaluate(expr.fold(expr.parse("1/0")), np.array([1.0]))).all()


@settings(max_examples=300, deadline=None)
@given(trees)
def test_print_parse_round_trip_is_idempotent(tree):
    once = expr.to_string(tree)
    reparsed = expr.parse(once)
    assert expr.to_string(reparsed) == once


@settings(max_examples=300, deadline=None)
@given(trees)
def test_printing_preserves_value(tree):
    x = np.array([0.3, 0.7, 1.9])
    with np.errstate(all="ignore"):
        a = expr.evaluate(tree, x)
        b = expr.evaluate(expr.parse(expr.to_string(tree)), x)
    ok = np.isfinite(a) & np.isfinite(b)
    np.testing.assert_allclose(a[ok], b[ok], rtol=1e-12, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(trees)
def test_symbolic_derivative_matches_central_difference(tree):
    f = expr.compile_tree(tree)
    df = expr.compile_tree(expr.diff(tree))
    x = np.array([0.4, 0.9, 1.6])
    h = 1e-5
    with np.errstate(all="ignore"):
        fd = (f(x + h) - f(x - h)) / (2 * h)
        fd2 = (f(x + 2 * h) - f(x - 2 * h)) / (4 * h)
        ex = df(x)
        vals = f(x)
    finite = np.isfinite(fd) & np.isfinite(ex) & np.isfinite(fd2) & np.isfinite(vals)
    # skip points where the function is too wild for a difference quotient
    calm = finite & (np.abs(vals) < 1e6) & (np.abs(ex) < 1e6) & (np.abs(fd - fd2) <= 1e-4 * (1 + np.abs(fd)))
    np.testing.assert_allclose(ex[calm], fd[calm], rtol=1e-5, atol=1e-5)
