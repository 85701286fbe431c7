import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hestonvi.cir import CONNECTION_Z_MAX, cir_homogeneous, cir_trace, cir_trace_limit, \
    classify_boundary, kummer_m, kummer_residual, kummer_u, kummer_u_small_z_limit, \
    kummer_u_trace_numeric, rgamma, solve_cir_1d
from hestonvi.errors import CoefficientError, ParamError
from hestonvi.params import HestonParams

mpmath.mp.dps = 30


def test_m_examples():
    assert kummer_m(0.7, 1.3, 0.0) == 1.0
    assert kummer_m(0.0, 1.3, 5.0) == 1.0
    assert kummer_m(1.0, 1.0, 2.0) == pytest.approx(math.exp(2), rel=1e-14)
    # terminating series: M(-2, b, z) is a Laguerre-type polynomial
    assert kummer_m(-2.0, 0.5, 1.5) == pytest.approx(1 - 2 * 1.5 / 0.5 + 1.5**2 / (0.5 * 1.5),
                                                      rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3.0, 4.0), st.floats(0.1, 4.0), st.floats(0.0, 25.0))
def test_m_matches_mpmath(a, b, z):
    ref = float(mpmath.hyp1f1(a, b, z))
    assert kummer_m(a, b, z) == pytest.approx(ref, rel=1e-9, abs=1e-12 * math.exp(z))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 4.0), st.floats(0.05, 2.5).filter(lambda b: abs(b - 1) > 1e-3),
       st.floats(1e-6, 40.0))
def test_u_matches_mpmath(a, b, z):
    ref = float(mpmath.hyperu(a, b, z))
    assert kummer_u(a, b, z) == pytest.approx(ref, rel=1e-8)


def test_u_examples():
    assert kummer_u(0.0, 0.5, 3.0) == 1.0
    # U(a, a+1, z) = z^(-a)
    assert kummer_u(1.5, 2.5, 2.0) == pytest.approx(2.0**-1.5, rel=1e-10)


def test_u_tends_to_constant_for_b_below_one():
    a, b = 1.0, 0.5
    lim = math.gamma(1 - b) / math.gamma(1 + a - b)
    assert kummer_u(a, b, 1e-12) == pytest.approx(lim, rel=1e-5)


def test_u_derivative_shift_relation():
    a, b, z, h = 0.8, 0.4, 0.3, 1e-5
    fd = (kummer_u(a, b, z + h) - kummer_u(a, b, z - h)) / (2 * h)
    assert fd == pytest.approx(-a * kummer_u(a + 1, b + 1, z), rel=1e-7)


def test_routes_agree_at_the_switch():
    a, b = 0.7, 0.3
    lo = kummer_u(a, b, CONNECTION_Z_MAX * (1 - 1e-12))
    hi = kummer_u(a, b, CONNECTION_Z_MAX * (1 + 1e-12))
    assert hi == pytest.approx(lo, rel=1e-9)


@pytest.mark.parametrize("a, b", [(1.0, 0.5), (2.0, 0.25), (0.5, 0.75)])
def test_small_z_trace_limit(a, b):
    exact = -a * math.gamma(b) / math.gamma(a + 1)
    assert kummer_u_small_z_limit(a, b) == pytest.approx(exact, rel=1e-14)
    assert kummer_u_trace_numeric(a, b) == pytest.approx(exact, rel=1e-6)


def test_small_z_limit_example():
    assert kummer_u_small_z_limit(1.0, 0.5) == pytest.approx(-math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("branch", ["M", "U"])
@pytest.mark.parametrize("a, b", [(0.5, 0.5), (1.0, 1.5), (2.0, 0.25)])
def test_ode_residual_is_small(branch, a, b):
    z = np.array([0.05, 0.3, 1.0, 3.0, 10.0])
    res, scale = kummer_residual(a, b, z, branch)
    assert np.all(res <= 1e-8 * scale)


def test_rgamma_and_errors():
    assert rgamma(-2.0) == 0.0
    assert rgamma(0.5) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15)
    with pytest.raises(ParamError):
        kummer_m(1.0, -1.0, 1.0)
    with pytest.raises(ParamError):
        kummer_m(1.0, 1.0, -1.0)
    with pytest.raises(ParamError):
        kummer_u(1.0, 0.5, 0.0)
    with pytest.raises(ParamError):
        kummer_residual(1.0, 0.5, [0.0])


def test_zero_rate_gives_constant_m_branch():
    p = HestonParams(1.0, 0.0, 1.0, 0.5, 0.0, 0.0)
    m, u = cir_homogeneous(p, np.array([0.01, 0.5, 3.0]))
    np.testing.assert_array_equal(m, 1.0)
    np.testing.assert_array_equal(u, 1.0)


def test_branches_are_independent():
    """Wronskian W(M, U)(z) = -Gamma(b)/Gamma(a) z^(-b) e^z never vanishes."""
    a, b = 0.5, 0.5
    for z in (0.1, 1.0, 5.0):
        Mv, Mp = kummer_m(a, b, z), a / b * kummer_m(a + 1, b + 1, z)
        Uv, Up = kummer_u(a, b, z), -a * kummer_u(a + 1, b + 1, z)
        W = Mv * Up - Mp * Uv
        assert W == pytest.approx(-math.gamma(b) / math.gamma(a) * z**-b * math.exp(z), rel=1e-8)


def test_cir_trace_limits():
    p = HestonParams(1.0, 0.0, 1.0, 0.25, 0.5, 0.0)     # beta = 0.5, mu = 2
    assert cir_trace_limit(p) == pytest.approx(-0.5 * math.gamma(0.5) / math.gamma(1.5)
                                               * 2**0.5, rel=1e-14)
    assert cir_trace(p, "U", 1e-10) == pytest.approx(cir_trace_limit(p), rel=1e-4)
    # the M branch is smooth, so its trace decays like y^beta
    t = cir_trace(p, "M", np.array([1e-6, 1e-4]))
    assert math.log10(t[1] / t[0]) / 2 == pytest.approx(0.5, abs=1e-3)
    with pytest.raises(ValueError):
        cir_trace(p, "V", 1.0)


def test_classify_boundary_large_beta():
    rep = classify_boundary(HestonParams(1.0, 0.0, 1.0, 0.75, 0.5, 0.0))   # beta = 1.5
    assert rep.classes[("U", "H1")] == "infinite"
    assert rep.classes[("M", "H1")] == "finite"
    assert rep.classes[("M", "H2")] == "finite"


def test_classify_boundary_small_beta():
    rep = classify_boundary(HestonParams(1.0, 0.0, 1.0, 0.25, 0.5, 0.0))   # beta = 0.5
    assert rep.classes[("U", "H1")] == "finite"
    assert rep.classes[("U", "H2")] == "infinite"
    assert rep.classes[("M", "H1")] == rep.classes[("M", "H2")] == "finite"
    rows = rep.rows()
    assert len(rows) == 4 * len(rep.cutoffs)
    assert {r["branch"] for r in rows} == {"M", "U"}


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_one_dimensional_galerkin_matches_m_branch(beta):
    p = HestonParams(1.0, 0.0, 1.0, beta / 2, 0.5, 0.0)
    errs = []
    for n in (65, 129):
        _, u, exact = solve_cir_1d(p, 2.0, n)
        errs.append(np.max(np.abs(u - exact)))
    assert errs[1] < 1e-4
    assert errs[1] < errs[0] / 3


def test_cir_params_are_validated():
    with pytest.raises(CoefficientError):
        cir_homogeneous(HestonParams(0.0, 0.0, 1.0, 0.5, 0.5, 0.0), 1.0)
    with pytest.raises(ParamError):
        cir_homogeneous(HestonParams(1.0, 0.0, 1.0, 0.5, 0.5, 0.0), 0.0)
