import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from hestonvi.fields import SmoothField, bump
from hestonvi.params import HestonParams, affine_change

X, Y = sp.symbols("x y")
PTS = np.meshgrid(np.linspace(-1.5, 1.5, 7), np.linspace(0.05, 2.0, 7))
num = st.floats(-2.0, 2.0)


def assert_jets_close(a, b, rtol=1e-10):
    for p, q in zip(a.jet(*PTS), b.jet(*PTS)):
        np.testing.assert_allclose(p, q, rtol=rtol, atol=rtol * (1 + np.abs(q).max()))


@settings(max_examples=40, deadline=None)
@given(num, num, num, st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), num)
def test_algebra_matches_symbolic_derivatives(d0, d1, d2, ell, k, c):
    u = SmoothField.affine(d0, d2, d1) * SmoothField.exp_x(ell) + c * SmoothField.exp_y(k)
    u = u * u - 0.5
    e = (d0 + d1 * X + d2 * Y) * sp.exp(ell * X) + c * sp.exp(k * Y)
    assert_jets_close(u, SmoothField.from_sympy(e * e - sp.Rational(1, 2)))


def test_from_sympy_constant_broadcasts():
    u = SmoothField.from_sympy(sp.Integer(3))
    assert u(*PTS).shape == PTS[0].shape
    assert np.all(u.jet(*PTS)[1] == 0)


def test_constant_and_negation():
    u = SmoothField.constant(2.0)
    assert np.all((1.0 - u)(*PTS) == -1.0)
    assert np.all((-u).fx(*PTS) == 0.0)


def test_bump_derivatives_match_symbolic():
    g, dg, ddg = bump(0.3, 0.8)
    t = np.linspace(-0.45, 1.05, 11)
    s = (sp.Symbol("t") - sp.Rational(3, 10)) / sp.Rational(4, 5)
    e = sp.exp(-1 / (1 - s**2))
    for fn, expr in ((g, e), (dg, sp.diff(e, "t")), (ddg, sp.diff(e, "t", 2))):
        ref = sp.lambdify(sp.Symbol("t"), expr, "numpy")(t)
        np.testing.assert_allclose(fn(t), ref, rtol=1e-10, atol=1e-14)
    assert np.all(g(np.array([-0.5, 1.1, 5.0])) == 0.0)


@pytest.mark.parametrize("m, a", [(0.0, 2.0), (0.5, 1.0), (1.0, 0.5)])
def test_pullback_matches_composition(m, a):
    ch = affine_change(HestonParams(1.0, -0.5, 1.0, 0.5, 0.5, 0.2), m=m, a=a)
    e = sp.sin(X) * sp.exp(Y / 2) + X * Y**2
    z, w = sp.symbols("z w")
    # x = z/c - m w/a, y = w/a
    c = sp.nsimplify(ch.c)
    comp = e.subs({X: z / c - sp.nsimplify(m) * w / sp.nsimplify(a), Y: w / sp.nsimplify(a)},
                  simultaneous=True)
    ref = SmoothField.from_sympy(comp, z, w)
    assert_jets_close(SmoothField.from_sympy(e).pullback_affine(ch), ref, rtol=1e-9)
