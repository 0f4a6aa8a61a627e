import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyplab._jet import Jet

RTOL = 1e-12


def taylor_of(fn_derivs):
    """Jet from a list of derivative values."""
    return Jet.from_derivatives(fn_derivs)


def test_exp_jet_matches_exp_derivatives():
    x0 = 0.3
    j = Jet.variable(x0, 5).exp()
    for k in range(6):
        assert j.derivative_value(k) == pytest.approx(np.exp(x0), rel=RTOL)


def test_product_rule_sin_cos():
    x0 = 0.7
    n = 6
    sin = taylor_of([np.sin(x0), np.cos(x0), -np.sin(x0), -np.cos(x0), np.sin(x0), np.cos(x0), -np.sin(x0)])
    cos = taylor_of([np.cos(x0), -np.sin(x0), -np.cos(x0), np.sin(x0), np.cos(x0), -np.sin(x0), -np.cos(x0)])
    prod = sin * cos
    # sin*cos = sin(2x)/2, whose k-th derivative is 2^(k-1) sin(2x + k pi/2)
    for k in range(n + 1):
        expect = 2.0 ** (k - 1) * np.sin(2 * x0 + k * np.pi / 2)
        assert prod.derivative_value(k) == pytest.approx(expect, rel=1e-10, abs=1e-12)


def test_sqrt_squares_back():
    j = Jet(np.array([2.0, -0.3, 0.11, 0.05, -0.02]))
    r = j.sqrt()
    back = r * r
    np.testing.assert_allclose(back.c, j.c, rtol=RTOL, atol=0)


def test_compose_log_of_shifted_square():
    # f = log about g0, g(t) = g0 + t^2-ish inner jet; compare against direct jet
    g = Jet(np.array([2.0, 1.0, 0.5, 0.0]))
    # jet of log about 2.0
    f = Jet.from_derivatives([np.log(2.0), 1 / 2.0, -1 / 4.0, 2 / 8.0])
    comp = f.compose(g)
    # log(g(t)) derivatives via d/dt log g = g'/g
    ratio = g.shift() / g
    assert comp.derivative_value(1) == pytest.approx(ratio.value(), rel=RTOL)
    assert comp.derivative_value(2) == pytest.approx(ratio.derivative_value(1), rel=RTOL)


@given(
    st.lists(st.floats(-2, 2), min_size=3, max_size=6),
    st.lists(st.floats(-2, 2), min_size=3, max_size=6),
)
@settings(max_examples=50, deadline=None)
def test_mul_commutes_and_distributes(a, b):
    ja, jb = Jet(np.array(a)), Jet(np.array(b))
    n = min(len(a), len(b))
    np.testing.assert_allclose((ja * jb).c, (jb * ja).c, rtol=0, atol=1e-12)
    lhs = (ja + jb) * ja
    rhs = ja * ja + jb * ja
    np.testing.assert_allclose(lhs.c[:n], rhs.c[:n], rtol=0, atol=1e-9)


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6))
@settings(max_examples=50, deadline=None)
def test_reciprocal_inverts(coeffs):
    coeffs[0] = coeffs[0] + (4.0 if coeffs[0] >= 0 else -4.0)  # keep away from 0
    j = Jet(np.array(coeffs))
    prod = j * j.reciprocal()
    expect = np.zeros_like(prod.c)
    expect[0] = 1.0
    np.testing.assert_allclose(prod.c, expect, rtol=0, atol=1e-10)


def test_exp_of_sum_is_product():
    a = Jet(np.array([0.2, 1.0, -0.4, 0.1]))
    b = Jet(np.array([-0.5, 0.3, 0.2, 0.05]))
    lhs = (a + b).exp()
    rhs = a.exp() * b.exp()
    np.testing.assert_allclose(lhs.c, rhs.c, rtol=1e-12, atol=1e-14)
